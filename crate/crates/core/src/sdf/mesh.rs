//! Marching-cubes extraction of the zero-level set.
//!
//! Instead of the usual 256-entry lookup table, each cell's polygons are built
//! directly: every cube face contributes the segments joining its sign-change
//! edges, the segments close into loops on the cube surface, and each loop is
//! fan-triangulated. Faces with two diagonal inside corners are resolved by
//! always separating the inside corners; neighbouring cells see the same face
//! and make the same choice, so the mesh is crack-free.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::math::Vec3;

use super::SdfError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl Bounds {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Bounds { min, max }
    }

    pub fn cube(half: f64) -> Self {
        Bounds { min: Vec3::splat(-half), max: Vec3::splat(half) }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl Mesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Every undirected edge is shared by exactly two triangles.
    pub fn is_closed(&self) -> bool {
        let mut count: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.values().all(|&c| c == 2)
    }
}

/// Corner `c` of a cell sits at offset `(c & 1, c >> 1 & 1, c >> 2 & 1)`.
fn corner_offset(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

/// The twelve cell edges as (lower corner, axis).
fn cell_edges() -> [(usize, usize); 12] {
    let mut e = [(0, 0); 12];
    let mut n = 0;
    for axis in 0..3 {
        for c in 0..8 {
            if c & (1 << axis) == 0 {
                e[n] = (c, axis);
                n += 1;
            }
        }
    }
    e
}

fn edge_index(edges: &[(usize, usize); 12], a: usize, b: usize) -> usize {
    let (lo, hi) = (a.min(b), a.max(b));
    let axis = (hi ^ lo).trailing_zeros() as usize;
    edges.iter().position(|&(c, ax)| c == lo && ax == axis).expect("adjacent corners")
}

/// For each of the six faces, its corners in cyclic order.
fn cell_faces() -> [[usize; 4]; 6] {
    let mut f = [[0; 4]; 6];
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2 {
            let base = side << axis;
            f[2 * axis + side] = [base, base | 1 << u, base | 1 << u | 1 << v, base | 1 << v];
        }
    }
    f
}

/// Triangulates `{x : field(x) < 0}` on a `resolution³` sample grid spanning
/// `bounds`. `field` receives batches of points and returns their values.
/// A field without sign changes yields an empty mesh.
pub fn extract_mesh<F>(mut field: F, resolution: usize, bounds: Bounds) -> Result<Mesh, SdfError>
where
    F: FnMut(&[Vec3]) -> Vec<f64>,
{
    if resolution < 2 {
        return Err(SdfError::InvalidResolution);
    }
    let n = resolution;
    let step = (bounds.max - bounds.min) * (1.0 / (n - 1) as f64);
    let pos = |i: usize, j: usize, k: usize| bounds.min + Vec3::new(i as f64 * step.x, j as f64 * step.y, k as f64 * step.z);
    let mut values = Vec::with_capacity(n * n * n);
    let mut slab = Vec::with_capacity(n * n);
    for k in 0..n {
        slab.clear();
        for j in 0..n {
            for i in 0..n {
                slab.push(pos(i, j, k));
            }
        }
        let v = field(&slab);
        assert_eq!(v.len(), slab.len(), "field returned wrong number of values");
        values.extend(v);
    }
    let idx = |i: usize, j: usize, k: usize| (k * n + j) * n + i;

    let edges = cell_edges();
    let faces = cell_faces();
    // Neighbouring edges of each local edge, per face.
    let mut mesh = Mesh::default();
    let mut vertex_of: BTreeMap<u64, u32> = BTreeMap::new();
    for k in 0..n - 1 {
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let mut v = [0.0; 8];
                let mut mask = 0u8;
                for (c, vc) in v.iter_mut().enumerate() {
                    let o = corner_offset(c);
                    *vc = values[idx(i + o[0], j + o[1], k + o[2])];
                    if *vc < 0.0 {
                        mask |= 1 << c;
                    }
                }
                if mask == 0 || mask == 0xff {
                    continue;
                }
                let inside = |c: usize| mask & (1 << c) != 0;
                let mut link = [[usize::MAX; 2]; 12];
                let mut connect = |a: usize, b: usize| {
                    for (x, y) in [(a, b), (b, a)] {
                        let slot = if link[x][0] == usize::MAX { 0 } else { 1 };
                        link[x][slot] = y;
                    }
                };
                for face in &faces {
                    let crossing: Vec<usize> = (0..4).filter(|&p| inside(face[p]) != inside(face[(p + 1) % 4])).collect();
                    let e = |p: usize| edge_index(&edges, face[p], face[(p + 1) % 4]);
                    match crossing.len() {
                        2 => connect(e(crossing[0]), e(crossing[1])),
                        4 => {
                            // Cut off each inside corner: corner p touches edges p−1 and p.
                            let first = if inside(face[0]) { 0 } else { 1 };
                            for p in [first, first + 2] {
                                connect(e((p + 3) % 4), e(p));
                            }
                        }
                        _ => {}
                    }
                }
                let mut used = [false; 12];
                for start in 0..12 {
                    if used[start] || link[start][0] == usize::MAX {
                        continue;
                    }
                    let mut cycle = Vec::new();
                    let (mut prev, mut cur) = (usize::MAX, start);
                    loop {
                        used[cur] = true;
                        cycle.push(cur);
                        let next = if link[cur][0] != prev { link[cur][0] } else { link[cur][1] };
                        prev = cur;
                        cur = next;
                        if cur == start {
                            break;
                        }
                    }
                    let mut ids = Vec::with_capacity(cycle.len());
                    let mut pts = Vec::with_capacity(cycle.len());
                    let mut outward = Vec3::ZERO;
                    for &le in &cycle {
                        let (c, axis) = edges[le];
                        let o = corner_offset(c);
                        let (gi, gj, gk) = (i + o[0], j + o[1], k + o[2]);
                        let c2 = c | 1 << axis;
                        let pa = pos(gi, gj, gk);
                        let o2 = corner_offset(c2);
                        let pb = pos(i + o2[0], j + o2[1], k + o2[2]);
                        let key = ((idx(gi, gj, gk) as u64) << 2) | axis as u64;
                        let id = *vertex_of.entry(key).or_insert_with(|| {
                            let t = v[c] / (v[c] - v[c2]);
                            mesh.vertices.push(pa + (pb - pa) * t);
                            (mesh.vertices.len() - 1) as u32
                        });
                        outward += if inside(c) { pb - pa } else { pa - pb };
                        ids.push(id);
                        pts.push(mesh.vertices[id as usize]);
                    }
                    // Newell normal of the loop.
                    let mut normal = Vec3::ZERO;
                    for a in 0..pts.len() {
                        let (p, q) = (pts[a], pts[(a + 1) % pts.len()]);
                        normal += p.cross(q);
                    }
                    if normal.dot(outward) < 0.0 {
                        ids.reverse();
                    }
                    for a in 1..ids.len() - 1 {
                        mesh.triangles.push([ids[0], ids[a], ids[a + 1]]);
                    }
                }
            }
        }
    }
    Ok(mesh)
}
