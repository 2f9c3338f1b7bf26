//! Gmsh MSH 2.2 ASCII import and export.
//!
//! Reads 2-node lines (type 1) as boundary edges and 3-node triangles
//! (type 2); a triangle's physical tag 2 marks it as a collar element. The
//! writer emits the same convention, so collar flags survive a round trip.
//! Unknown sections are skipped, any other element type is an error.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::scalar::{real, Real};

struct Lines<R> {
    src: R,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(src: R) -> Self {
        Self { src, line_no: 0 }
    }

    /// Next non-empty line, trimmed; `None` at end of input.
    fn next(&mut self) -> Result<Option<(usize, String)>> {
        loop {
            let mut buf = String::new();
            let n = self.src.read_line(&mut buf)?;
            if n == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let t = buf.trim();
            if !t.is_empty() {
                return Ok(Some((self.line_no, t.to_string())));
            }
        }
    }

    fn require(&mut self, what: &str) -> Result<(usize, String)> {
        self.next()?.ok_or(Error::Parse {
            line: self.line_no,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse_count(line: usize, text: &str) -> Result<usize> {
    text.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a count, found {text:?}"),
    })
}

/// Reads a mesh from Gmsh MSH 2.2 ASCII.
///
/// Boundary edges are re-chained into a single counterclockwise loop and arc
/// coordinates start as cumulative chord lengths (replace them via
/// [`crate::mesh::snap_boundary_to_curve`] when the analytic curve is known).
/// Collar flags come from triangle physical tags and default to bulk.
pub fn read_msh<T: Real, R: BufRead>(src: R) -> Result<TriMesh<T>> {
    let mut lines = Lines::new(src);

    let (ln, head) = lines.require("$MeshFormat")?;
    if head != "$MeshFormat" {
        return Err(Error::Parse {
            line: ln,
            msg: format!("expected $MeshFormat, found {head:?}"),
        });
    }
    let (ln, ver) = lines.require("format line")?;
    let mut it = ver.split_whitespace();
    let version = it.next().unwrap_or("");
    if version != "2.2" || it.next() != Some("0") {
        return Err(Error::Parse {
            line: ln,
            msg: format!("unsupported MSH format {ver:?}, expected \"2.2 0 8\""),
        });
    }
    let (ln, end) = lines.require("$EndMeshFormat")?;
    if end != "$EndMeshFormat" {
        return Err(Error::Parse {
            line: ln,
            msg: format!("expected $EndMeshFormat, found {end:?}"),
        });
    }

    let mut raw_nodes: Vec<(u64, [T; 2])> = Vec::new();
    let mut raw_lines: Vec<(usize, [u64; 2])> = Vec::new();
    let mut raw_tris: Vec<(usize, [u64; 3], bool)> = Vec::new();

    while let Some((ln, section)) = lines.next()? {
        match section.as_str() {
            "$Nodes" => {
                let (cl, count) = lines.require("node count")?;
                let count = parse_count(cl, &count)?;
                for _ in 0..count {
                    let (el, entry) = lines.require("node entry")?;
                    let tok: Vec<&str> = entry.split_whitespace().collect();
                    if tok.len() != 4 {
                        return Err(Error::Parse {
                            line: el,
                            msg: format!("node entry needs 4 fields, found {}", tok.len()),
                        });
                    }
                    let id: u64 = tok[0].parse().map_err(|_| Error::Parse {
                        line: el,
                        msg: format!("bad node id {:?}", tok[0]),
                    })?;
                    let mut xy = [T::zero(); 2];
                    for (k, slot) in xy.iter_mut().enumerate() {
                        let v: f64 = tok[k + 1].parse().map_err(|_| Error::Parse {
                            line: el,
                            msg: format!("bad coordinate {:?}", tok[k + 1]),
                        })?;
                        *slot = real(v);
                    }
                    raw_nodes.push((id, xy));
                }
                let (el, end) = lines.require("$EndNodes")?;
                if end != "$EndNodes" {
                    return Err(Error::Parse {
                        line: el,
                        msg: format!("expected $EndNodes, found {end:?}"),
                    });
                }
            }
            "$Elements" => {
                let (cl, count) = lines.require("element count")?;
                let count = parse_count(cl, &count)?;
                for _ in 0..count {
                    let (el, entry) = lines.require("element entry")?;
                    let tok: Vec<&str> = entry.split_whitespace().collect();
                    if tok.len() < 3 {
                        return Err(Error::Parse {
                            line: el,
                            msg: "element entry too short".into(),
                        });
                    }
                    let etype: u32 = tok[1].parse().map_err(|_| Error::Parse {
                        line: el,
                        msg: format!("bad element type {:?}", tok[1]),
                    })?;
                    let ntags: usize = tok[2].parse().map_err(|_| Error::Parse {
                        line: el,
                        msg: format!("bad tag count {:?}", tok[2]),
                    })?;
                    let nodes_at = 3 + ntags;
                    let want = match etype {
                        1 => 2,
                        2 => 3,
                        other => {
                            return Err(Error::Parse {
                                line: el,
                                msg: format!("unsupported element type {other}"),
                            })
                        }
                    };
                    if tok.len() != nodes_at + want {
                        return Err(Error::Parse {
                            line: el,
                            msg: format!(
                                "element needs {want} node refs, found {}",
                                tok.len().saturating_sub(nodes_at)
                            ),
                        });
                    }
                    let mut refs = [0u64; 3];
                    for k in 0..want {
                        refs[k] = tok[nodes_at + k].parse().map_err(|_| Error::Parse {
                            line: el,
                            msg: format!("bad node reference {:?}", tok[nodes_at + k]),
                        })?;
                    }
                    if etype == 1 {
                        raw_lines.push((el, [refs[0], refs[1]]));
                    } else {
                        let strip = ntags >= 1 && tok[3] == "2";
                        raw_tris.push((el, refs, strip));
                    }
                }
                let (el, end) = lines.require("$EndElements")?;
                if end != "$EndElements" {
                    return Err(Error::Parse {
                        line: el,
                        msg: format!("expected $EndElements, found {end:?}"),
                    });
                }
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                // Unknown section: skip to its terminator.
                let terminator = format!("$End{}", &other[1..]);
                loop {
                    let (_, l) = lines.require(&terminator)?;
                    if l == terminator {
                        break;
                    }
                }
            }
            other => {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("unexpected content {other:?} between sections"),
                });
            }
        }
    }

    // Resolve ids (file order) and check references.
    let mut id_map: HashMap<u64, u32> = HashMap::with_capacity(raw_nodes.len());
    let mut nodes = Vec::with_capacity(raw_nodes.len());
    for (id, xy) in raw_nodes {
        if id_map.insert(id, nodes.len() as u32).is_some() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("duplicate node id {id}"),
            });
        }
        nodes.push(xy);
    }
    let resolve = |line: usize, id: u64, id_map: &HashMap<u64, u32>| -> Result<u32> {
        id_map.get(&id).copied().ok_or(Error::Parse {
            line,
            msg: format!("element references missing node {id}"),
        })
    };

    let mut tris = Vec::with_capacity(raw_tris.len());
    let mut tri_in_strip = Vec::with_capacity(raw_tris.len());
    for (el, refs, strip) in raw_tris {
        let a = resolve(el, refs[0], &id_map)?;
        let b = resolve(el, refs[1], &id_map)?;
        let c = resolve(el, refs[2], &id_map)?;
        // Normalize orientation to counterclockwise.
        let pa = nodes[a as usize];
        let pb = nodes[b as usize];
        let pc = nodes[c as usize];
        let area2 =
            (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
        if area2 > T::zero() {
            tris.push([a, b, c]);
        } else {
            tris.push([a, c, b]);
        }
        tri_in_strip.push(strip);
    }

    let mut edges = Vec::with_capacity(raw_lines.len());
    for (el, refs) in raw_lines {
        let a = resolve(el, refs[0], &id_map)?;
        let b = resolve(el, refs[1], &id_map)?;
        edges.push([a, b]);
    }
    let boundary_edges = chain_boundary_loop(&nodes, edges)?;

    let mut boundary_s = Vec::with_capacity(boundary_edges.len());
    let mut s = T::zero();
    for &[a, b] in &boundary_edges {
        boundary_s.push(s);
        let pa = nodes[a as usize];
        let pb = nodes[b as usize];
        s += ((pb[0] - pa[0]) * (pb[0] - pa[0]) + (pb[1] - pa[1]) * (pb[1] - pa[1])).sqrt();
    }

    let mesh = TriMesh {
        nodes,
        tris,
        tri_in_strip,
        boundary_edges,
        boundary_s,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Orders boundary segments into one closed counterclockwise loop.
fn chain_boundary_loop<T: Real>(
    nodes: &[[T; 2]],
    mut edges: Vec<[u32; 2]>,
) -> Result<Vec<[u32; 2]>> {
    if edges.len() < 3 {
        return Err(Error::Geometry(
            "boundary needs at least 3 line elements".into(),
        ));
    }
    // Undirected adjacency: each boundary node must touch exactly two
    // segments. Orientation in the file is not trusted.
    let mut touch: HashMap<u32, Vec<usize>> = HashMap::new();
    for (k, &[a, b]) in edges.iter().enumerate() {
        if a == b {
            return Err(Error::Geometry("degenerate boundary segment".into()));
        }
        touch.entry(a).or_default().push(k);
        touch.entry(b).or_default().push(k);
    }
    for (node, segs) in &touch {
        if segs.len() != 2 {
            return Err(Error::Geometry(format!(
                "boundary node {node} touches {} segments, expected 2",
                segs.len()
            )));
        }
    }

    let mut loop_edges = Vec::with_capacity(edges.len());
    let mut used = vec![false; edges.len()];
    let mut at = edges[0][0];
    loop {
        let Some(&k) = touch[&at].iter().find(|&&k| !used[k]) else {
            break;
        };
        used[k] = true;
        let [a, b] = edges[k];
        let next = if a == at { b } else { a };
        loop_edges.push([at, next]);
        at = next;
    }
    if loop_edges.len() != edges.len() || at != edges[0][0] {
        return Err(Error::Geometry(
            "boundary segments do not form a single closed loop".into(),
        ));
    }

    // Counterclockwise: positive signed area of the loop polygon.
    let mut area2 = T::zero();
    for &[a, b] in &loop_edges {
        let pa = nodes[a as usize];
        let pb = nodes[b as usize];
        area2 += pa[0] * pb[1] - pb[0] * pa[1];
    }
    if area2 == T::zero() {
        return Err(Error::Geometry("boundary loop encloses zero area".into()));
    }
    if area2 < T::zero() {
        loop_edges.reverse();
        for e in &mut loop_edges {
            e.swap(0, 1);
        }
    }
    edges.clear();
    Ok(loop_edges)
}

/// Writes a mesh as Gmsh MSH 2.2 ASCII; inverse of [`read_msh`].
pub fn write_msh<T: Real, W: Write>(mesh: &TriMesh<T>, mut out: W) -> Result<()> {
    writeln!(out, "$MeshFormat\n2.2 0 8\n$EndMeshFormat")?;
    writeln!(out, "$Nodes\n{}", mesh.n_nodes())?;
    for (k, p) in mesh.nodes.iter().enumerate() {
        // 17 significant digits round-trip f64 exactly.
        writeln!(out, "{} {:.16e} {:.16e} 0", k + 1, p[0].as_f64(), p[1].as_f64())?;
    }
    writeln!(out, "$EndNodes")?;
    writeln!(
        out,
        "$Elements\n{}",
        mesh.boundary_edges.len() + mesh.n_tris()
    )?;
    let mut id = 0usize;
    for &[a, b] in &mesh.boundary_edges {
        id += 1;
        writeln!(out, "{id} 1 2 1 1 {} {}", a + 1, b + 1)?;
    }
    for (t, tri) in mesh.tris.iter().enumerate() {
        id += 1;
        let phys = if mesh.tri_in_strip[t] { 2 } else { 1 };
        writeln!(
            out,
            "{id} 2 2 {phys} 1 {} {} {}",
            tri[0] + 1,
            tri[1] + 1,
            tri[2] + 1
        )?;
    }
    writeln!(out, "$EndElements")?;
    Ok(())
}
