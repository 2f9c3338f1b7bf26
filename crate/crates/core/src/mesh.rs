//! Layer-conforming triangulations of smooth star-shaped domains.
//!
//! The mesher places a ring of nodes on the boundary polygon, `n_layer`
//! conforming rings through the depth-`eps` collar (so the collar is resolved
//! by whole elements and its polygonal area is exact), then uniformly spaced
//! scaled copies of the offset ring down to a center fan. Topology depends
//! only on the ring counts, never on `eps`, so a family of meshes over
//! shrinking `eps` is node-for-node comparable.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Point};
use crate::scalar::{real, Real};

/// Conforming P1 triangle mesh of a planar domain with one closed boundary
/// loop.
#[derive(Debug, Clone)]
pub struct TriMesh<T> {
    /// Node coordinates.
    pub nodes: Vec<Point<T>>,
    /// Triangles as node index triples, counterclockwise.
    pub tris: Vec<[u32; 3]>,
    /// Whether each triangle lies in the boundary collar.
    pub tri_in_strip: Vec<bool>,
    /// Boundary edges ordered counterclockwise; edge `k` runs from node
    /// `boundary_edges[k][0]` to `boundary_edges[k][1]`, and consecutive
    /// edges share a node, closing into a single loop.
    pub boundary_edges: Vec<[u32; 2]>,
    /// Arc-length coordinate of the first node of each boundary edge.
    pub boundary_s: Vec<T>,
}

impl<T: Real> TriMesh<T> {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_tris(&self) -> usize {
        self.tris.len()
    }

    pub fn tri_area(&self, t: usize) -> T {
        let [a, b, c] = self.tris[t];
        let pa = self.nodes[a as usize];
        let pb = self.nodes[b as usize];
        let pc = self.nodes[c as usize];
        ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]))
            / real::<T>(2.0)
    }

    /// Total polygonal area (sum of triangle areas).
    pub fn area(&self) -> T {
        (0..self.n_tris()).map(|t| self.tri_area(t)).sum()
    }

    /// Area of the collar triangles.
    pub fn strip_area(&self) -> T {
        (0..self.n_tris())
            .filter(|&t| self.tri_in_strip[t])
            .map(|t| self.tri_area(t))
            .sum()
    }

    /// Area of the non-collar triangles.
    pub fn bulk_area(&self) -> T {
        (0..self.n_tris())
            .filter(|&t| !self.tri_in_strip[t])
            .map(|t| self.tri_area(t))
            .sum()
    }

    /// Perimeter of the boundary polygon (chord lengths).
    pub fn boundary_len(&self) -> T {
        self.boundary_edges
            .iter()
            .map(|&[a, b]| {
                let pa = self.nodes[a as usize];
                let pb = self.nodes[b as usize];
                ((pb[0] - pa[0]) * (pb[0] - pa[0]) + (pb[1] - pa[1]) * (pb[1] - pa[1])).sqrt()
            })
            .sum()
    }

    /// Longest edge over all triangles.
    pub fn h_max(&self) -> T {
        let mut h = T::zero();
        for tri in &self.tris {
            for k in 0..3 {
                let pa = self.nodes[tri[k] as usize];
                let pb = self.nodes[tri[(k + 1) % 3] as usize];
                let d = ((pb[0] - pa[0]) * (pb[0] - pa[0])
                    + (pb[1] - pa[1]) * (pb[1] - pa[1]))
                    .sqrt();
                if d > h {
                    h = d;
                }
            }
        }
        h
    }

    /// Structural soundness: positive orientation, a single closed boundary
    /// loop that bounds the triangulation, disk topology, and consistent
    /// auxiliary arrays.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_nodes();
        if self.tri_in_strip.len() != self.tris.len() {
            return Err(Error::Geometry("strip flag count != triangle count".into()));
        }
        if self.boundary_s.len() != self.boundary_edges.len() {
            return Err(Error::Geometry(
                "boundary arc coordinate count != boundary edge count".into(),
            ));
        }
        for (t, tri) in self.tris.iter().enumerate() {
            if tri.iter().any(|&v| v as usize >= n) {
                return Err(Error::Geometry(format!("triangle {t} references missing node")));
            }
            if self.tri_area(t) <= T::zero() {
                return Err(Error::Geometry(format!(
                    "triangle {t} is inverted or degenerate"
                )));
            }
        }

        // Undirected edge incidence and the set of directed triangle edges.
        let mut edge_count: HashMap<(u32, u32), u8> = HashMap::new();
        let mut directed: HashMap<(u32, u32), u32> = HashMap::new();
        for tri in &self.tris {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = if a < b { (a, b) } else { (b, a) };
                *edge_count.entry(key).or_insert(0) += 1;
                *directed.entry((a, b)).or_insert(0) += 1;
            }
        }
        for (&(a, b), &c) in &edge_count {
            if c > 2 {
                return Err(Error::Geometry(format!(
                    "edge ({a},{b}) shared by more than two triangles"
                )));
            }
        }

        // Each boundary edge must be the free (counterclockwise) edge of
        // exactly one triangle.
        for &[a, b] in &self.boundary_edges {
            let key = if a < b { (a, b) } else { (b, a) };
            if edge_count.get(&key) != Some(&1) {
                return Err(Error::Geometry(format!(
                    "boundary edge ({a},{b}) is not a free triangle edge"
                )));
            }
            if directed.get(&(a, b)) != Some(&1) {
                return Err(Error::Geometry(format!(
                    "boundary edge ({a},{b}) disagrees with triangle orientation"
                )));
            }
        }
        let free_edges = edge_count.values().filter(|&&c| c == 1).count();
        if free_edges != self.boundary_edges.len() {
            return Err(Error::Geometry(format!(
                "{} free edges but {} boundary edges",
                free_edges,
                self.boundary_edges.len()
            )));
        }

        // Single closed loop visiting each boundary node once.
        let nb = self.boundary_edges.len();
        if nb < 3 {
            return Err(Error::Geometry("boundary loop has fewer than 3 edges".into()));
        }
        for k in 0..nb {
            if self.boundary_edges[k][1] != self.boundary_edges[(k + 1) % nb][0] {
                return Err(Error::Geometry(format!(
                    "boundary edges {k} and {} do not chain",
                    (k + 1) % nb
                )));
            }
        }
        let mut seen = vec![false; n];
        for &[a, _] in &self.boundary_edges {
            if seen[a as usize] {
                return Err(Error::Geometry(format!("boundary visits node {a} twice")));
            }
            seen[a as usize] = true;
        }

        // Disk topology: V - E + F = 1 for a triangulated disk without the
        // outer face.
        let euler =
            n as i64 - edge_count.len() as i64 + self.tris.len() as i64;
        if euler != 1 {
            return Err(Error::Geometry(format!(
                "Euler characteristic {euler} != 1; mesh is not a disk"
            )));
        }

        for k in 1..nb {
            if !(self.boundary_s[k] > self.boundary_s[k - 1]) {
                return Err(Error::Geometry(
                    "boundary arc coordinates are not strictly increasing".into(),
                ));
            }
        }
        if self.boundary_s[0] < T::zero() {
            return Err(Error::Geometry("negative boundary arc coordinate".into()));
        }
        Ok(())
    }
}

/// Meshes the domain bounded by `curve` with a collar of `n_layer` element
/// rings through depth `eps` and `n_interior` rings from the offset curve to
/// the center fan.
///
/// Node ids are ring-major from the boundary inward (center node last), so
/// the profile bandwidth stays near `n_t`.
pub fn mesh_star_domain<T: Real>(
    curve: &BoundaryCurve<T>,
    eps: T,
    n_t: usize,
    n_layer: usize,
    n_interior: usize,
) -> Result<TriMesh<T>> {
    curve.check_eps(eps)?;
    if n_t < 3 {
        return Err(Error::Config("need at least 3 boundary nodes".into()));
    }
    if n_layer < 1 || n_interior < 1 {
        return Err(Error::Config("ring counts must be at least 1".into()));
    }
    let len = curve.len();
    let n_rings = n_layer + n_interior;
    let id = |ring: usize, i: usize| (ring * n_t + i % n_t) as u32;

    let mut nodes: Vec<Point<T>> = Vec::with_capacity(n_rings * n_t + 1);
    let mut boundary_s = Vec::with_capacity(n_t);
    let mut offset_ring: Vec<Point<T>> = Vec::with_capacity(n_t);
    // Collar rings, including the boundary itself and the depth-eps ring.
    for ring in 0..=n_layer {
        let depth = eps * real::<T>(ring as f64 / n_layer as f64);
        for i in 0..n_t {
            let s = len * real::<T>(i as f64 / n_t as f64);
            let g = curve.gamma(s);
            let nu = curve.normal(s);
            let p = [g[0] - depth * nu[0], g[1] - depth * nu[1]];
            if ring == 0 {
                boundary_s.push(s);
            }
            if ring == n_layer {
                offset_ring.push(p);
            }
            nodes.push(p);
        }
    }
    // Interior rings: uniformly scaled copies of the offset ring. The domains
    // handled here are star-shaped about the origin, which the curve
    // validation has already vouched for indirectly (positive radius);
    // inverted elements would still be caught below.
    for k in 1..n_interior {
        let sigma = real::<T>(1.0 - k as f64 / n_interior as f64);
        for p in &offset_ring {
            nodes.push([p[0] * sigma, p[1] * sigma]);
        }
    }
    let center = nodes.len() as u32;
    nodes.push([T::zero(), T::zero()]);

    let mut tris = Vec::with_capacity((n_rings - 1) * 2 * n_t + n_t);
    let mut tri_in_strip = Vec::with_capacity(tris.capacity());
    for band in 0..n_rings - 1 {
        for i in 0..n_t {
            let a = id(band, i);
            let b = id(band, i + 1);
            let c = id(band + 1, i);
            let d = id(band + 1, i + 1);
            tris.push([a, b, d]);
            tris.push([a, d, c]);
            tri_in_strip.push(band < n_layer);
            tri_in_strip.push(band < n_layer);
        }
    }
    for i in 0..n_t {
        tris.push([id(n_rings - 1, i), id(n_rings - 1, i + 1), center]);
        tri_in_strip.push(false);
    }

    let boundary_edges = (0..n_t)
        .map(|i| [i as u32, ((i + 1) % n_t) as u32])
        .collect();

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

/// Reclassifies every triangle by whether its centroid lies in the depth-`eps`
/// collar, for meshes whose flags are unknown (ingested files) or whose `eps`
/// changed.
///
/// Classification alone permits any mesh; whether the flags are usable as an
/// indicator of the collar is a separate question answered by
/// [`check_layer_conforming`].
pub fn classify_strip<T: Real>(
    mesh: &mut TriMesh<T>,
    curve: &BoundaryCurve<T>,
    eps: T,
) -> Result<()> {
    curve.check_eps(eps)?;
    let mut flags = Vec::with_capacity(mesh.n_tris());
    for tri in &mesh.tris {
        let [a, b, c] = tri.map(|v| mesh.nodes[v as usize]);
        let third = real::<T>(3.0);
        let centroid = [
            (a[0] + b[0] + c[0]) / third,
            (a[1] + b[1] + c[1]) / third,
        ];
        flags.push(curve.strip_project(centroid, eps)?.is_some());
    }
    mesh.tri_in_strip = flags;
    Ok(())
}

/// Verifies that the depth-`eps` interface aligns with element boundaries, so
/// per-triangle collar flags represent the collar indicator faithfully.
///
/// A triangle with nodes deeper and shallower than `eps` by more than
/// `h_max * 1e-6` would be cut by the interface; piecewise-constant densities
/// assembled from the flags would then carry an O(h) discretization crime.
pub fn check_layer_conforming<T: Real>(
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
    eps: T,
) -> Result<()> {
    curve.check_eps(eps)?;
    let tol = mesh.h_max() * real::<T>(1e-6);
    // Node depths up to the trusted collar; deeper nodes read as infinite,
    // which is the correct side of every comparison below.
    let depth: Vec<T> = mesh
        .nodes
        .iter()
        .map(|&p| Ok(curve.depth_within_reach(p)?.unwrap_or(T::infinity())))
        .collect::<Result<_>>()?;
    for (t, tri) in mesh.tris.iter().enumerate() {
        let d = tri.map(|v| depth[v as usize]);
        let d_min = d[0].min(d[1]).min(d[2]);
        let d_max = d[0].max(d[1]).max(d[2]);
        if d_min < eps - tol && d_max > eps + tol {
            return Err(Error::Geometry(format!(
                "triangle {t} straddles the depth-{} interface; the mesh is not layer-conforming",
                eps.as_f64()
            )));
        }
    }
    Ok(())
}

/// Moves each boundary node onto the analytic curve and replaces the chordal
/// arc coordinates with exact ones.
///
/// Intended for ingested meshes of star-shaped domains; a node farther than
/// `h_max / 10` from the curve means the mesh does not discretize this domain
/// and is rejected. The boundary loop is rotated to start at the smallest arc
/// coordinate.
pub fn snap_boundary_to_curve<T: Real>(
    mesh: &mut TriMesh<T>,
    curve: &BoundaryCurve<T>,
) -> Result<()> {
    let cap = mesh.h_max() / real::<T>(10.0);
    let nb = mesh.boundary_edges.len();
    let two_pi = T::PI() * real::<T>(2.0);
    let mut s_vals = Vec::with_capacity(nb);
    for k in 0..nb {
        let v = mesh.boundary_edges[k][0] as usize;
        let p = mesh.nodes[v];
        let mut theta = p[1].atan2(p[0]);
        if theta < T::zero() {
            theta += two_pi;
        }
        let s = curve.s_of_theta(theta);
        let g = curve.gamma(s);
        let dist = ((g[0] - p[0]) * (g[0] - p[0]) + (g[1] - p[1]) * (g[1] - p[1])).sqrt();
        if dist > cap {
            return Err(Error::Geometry(format!(
                "boundary node {v} is {:.3e} away from the curve (limit {:.3e})",
                dist.as_f64(),
                cap.as_f64()
            )));
        }
        mesh.nodes[v] = g;
        s_vals.push(s);
    }
    let start = s_vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("arc coordinate is not NaN"))
        .map(|(k, _)| k)
        .unwrap_or(0);
    mesh.boundary_edges.rotate_left(start);
    s_vals.rotate_left(start);
    for k in 1..nb {
        if !(s_vals[k] > s_vals[k - 1]) {
            return Err(Error::Geometry(
                "snapped boundary nodes are not monotone along the curve".into(),
            ));
        }
    }
    mesh.boundary_s = s_vals;
    Ok(())
}
