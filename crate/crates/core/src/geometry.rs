//! Export pipeline (threshold, mirror, scale, extrude), binary STL, and the
//! two geometric validators used by the design-quality score.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, DesignGrid, Grid2};
use crate::params::ExportParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    /// Counter-clockwise seen from outside.
    pub triangles: Vec<[u32; 3]>,
}

/// Reverses the column order of every row.
pub fn mirror_y(grid: &BinaryGrid) -> BinaryGrid {
    let cols = grid.cols();
    Grid2::from_fn(grid.rows(), cols, |r, c| grid.get(r, cols - 1 - c))
}

/// Lattice corner (column, row-from-bottom, top?) to vertex index.
struct VertexPool {
    index: HashMap<(usize, usize, bool), u32>,
    vertices: Vec<[f64; 3]>,
    scale_xy: f64,
    scale_z: f64,
}

impl VertexPool {
    fn id(&mut self, x: usize, y: usize, top: bool) -> u32 {
        let (sxy, sz) = (self.scale_xy, self.scale_z);
        let vertices = &mut self.vertices;
        *self.index.entry((x, y, top)).or_insert_with(|| {
            vertices.push([x as f64 * sxy, y as f64 * sxy, if top { sz } else { 0.0 }]);
            (vertices.len() - 1) as u32
        })
    }
}

/// Naive per-cell extrusion. Each material cell becomes a box; faces between
/// edge-adjacent material cells are dropped. Diagonal neighbours keep both
/// boxes and therefore share a bare vertical edge (non-manifold output).
pub fn extrude_to_mesh(grid: &BinaryGrid, scale_xy: f64, scale_z: f64) -> Result<TriangleMesh> {
    if !scale_xy.is_finite() || scale_xy <= 0.0 {
        return Err(Error::invalid("scale_xy", format!("{scale_xy} must be > 0")));
    }
    if !scale_z.is_finite() || scale_z <= 0.0 {
        return Err(Error::invalid("scale_z", format!("{scale_z} must be > 0")));
    }
    if grid.material_count() == 0 {
        return Err(Error::EmptyDesign);
    }
    let (rows, cols) = (grid.rows(), grid.cols());
    let solid = |r: isize, c: isize| {
        r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols && grid.get(r as usize, c as usize)
    };

    let mut pool = VertexPool { index: HashMap::new(), vertices: Vec::new(), scale_xy, scale_z };
    let mut triangles = Vec::new();
    let mut quad = |pool: &mut VertexPool, corners: [(usize, usize, bool); 4]| {
        let [a, b, c, d] = corners.map(|(x, y, t)| pool.id(x, y, t));
        triangles.push([a, b, c]);
        triangles.push([a, c, d]);
    };

    for r in 0..rows {
        // Row 0 is the top of the design, so it sits highest in y.
        let (y0, y1) = (rows - 1 - r, rows - r);
        for c in 0..cols {
            if !grid.get(r, c) {
                continue;
            }
            let (x0, x1) = (c, c + 1);
            let (ri, ci) = (r as isize, c as isize);
            quad(&mut pool, [(x0, y0, true), (x1, y0, true), (x1, y1, true), (x0, y1, true)]);
            quad(&mut pool, [(x0, y0, false), (x0, y1, false), (x1, y1, false), (x1, y0, false)]);
            if !solid(ri + 1, ci) {
                quad(&mut pool, [(x0, y0, false), (x1, y0, false), (x1, y0, true), (x0, y0, true)]);
            }
            if !solid(ri - 1, ci) {
                quad(&mut pool, [(x0, y1, false), (x0, y1, true), (x1, y1, true), (x1, y1, false)]);
            }
            if !solid(ri, ci - 1) {
                quad(&mut pool, [(x0, y0, false), (x0, y0, true), (x0, y1, true), (x0, y1, false)]);
            }
            if !solid(ri, ci + 1) {
                quad(&mut pool, [(x1, y0, false), (x1, y1, false), (x1, y1, true), (x1, y0, true)]);
            }
        }
    }
    Ok(TriangleMesh { vertices: pool.vertices, triangles })
}

/// Threshold, optionally mirror, then extrude with the requested scales.
pub fn export_mesh(design: &DesignGrid, export: &ExportParams) -> Result<TriangleMesh> {
    export.validate()?;
    let mut binary = design.binarize(export.threshold)?;
    if export.mirror_y {
        binary = mirror_y(&binary);
    }
    extrude_to_mesh(&binary, export.scale_xy, export.scale_z)
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl TriangleMesh {
    pub fn corners(&self, tri: [u32; 3]) -> [[f64; 3]; 3] {
        tri.map(|i| self.vertices[i as usize])
    }

    pub fn normal(&self, tri: [u32; 3]) -> [f64; 3] {
        let [a, b, c] = self.corners(tri);
        let n = cross(sub(b, a), sub(c, a));
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if len == 0.0 {
            [0.0; 3]
        } else {
            n.map(|v| v / len)
        }
    }

    /// Volume via the divergence theorem; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&t| {
                let [a, b, c] = self.corners(t);
                let n = cross(b, c);
                (a[0] * n[0] + a[1] * n[1] + a[2] * n[2]) / 6.0
            })
            .sum()
    }
}

const STL_HEADER: &[u8] = b"engbench binary STL";

/// Binary STL: 80-byte header, u32 count, 50 bytes per triangle.
pub fn write_stl(mesh: &TriangleMesh) -> Result<Vec<u8>> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let count = u32::try_from(mesh.triangles.len())
        .map_err(|_| Error::TooManyTriangles(mesh.triangles.len()))?;
    let mut out = Vec::with_capacity(84 + 50 * mesh.triangles.len());
    let mut header = [0u8; 80];
    header[..STL_HEADER.len()].copy_from_slice(STL_HEADER);
    out.extend_from_slice(&header);
    out.extend_from_slice(&count.to_le_bytes());
    for &tri in &mesh.triangles {
        let normal = mesh.normal(tri);
        for v in std::iter::once(normal).chain(mesh.corners(tri)) {
            for x in v {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    Ok(out)
}

/// One decoded STL facet: normal followed by three vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StlFacet {
    pub normal: [f32; 3],
    pub vertices: [[f32; 3]; 3],
}

pub fn read_stl(bytes: &[u8]) -> Result<Vec<StlFacet>> {
    if bytes.len() < 84 {
        return Err(Error::MalformedStl(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
    let expected = 84 + 50 * count;
    if bytes.len() != expected {
        return Err(Error::MalformedStl(format!(
            "{count} triangles need {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let f = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().expect("4 bytes"));
    let vec3 = |off: usize| [f(off), f(off + 4), f(off + 8)];
    Ok((0..count)
        .map(|i| {
            let base = 84 + 50 * i;
            StlFacet {
                normal: vec3(base),
                vertices: [vec3(base + 12), vec3(base + 24), vec3(base + 36)],
            }
        })
        .collect())
}

/// Undirected edge that is not bounded by exactly one face in each direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDefect {
    pub edge: [u32; 2],
    pub forward: usize,
    pub backward: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatertightReport {
    pub watertight: bool,
    pub defects: Vec<EdgeDefect>,
}

/// Closed 2-manifold check on edge incidence.
pub fn is_watertight(mesh: &TriangleMesh) -> WatertightReport {
    let mut edges: BTreeMap<[u32; 2], (usize, usize)> = BTreeMap::new();
    for t in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let entry = edges.entry([a.min(b), a.max(b)]).or_default();
            if a < b {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
    }
    let defects: Vec<EdgeDefect> = edges
        .into_iter()
        .filter(|(_, (f, b))| (*f, *b) != (1, 1))
        .map(|(edge, (forward, backward))| EdgeDefect { edge, forward, backward })
        .collect();
    WatertightReport { watertight: defects.is_empty() && !mesh.triangles.is_empty(), defects }
}

/// Number of 8-connected material components.
pub fn count_components(grid: &BinaryGrid) -> usize {
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut seen = vec![false; rows * cols];
    let mut queue = VecDeque::new();
    let mut components = 0;
    for start in 0..rows * cols {
        if !grid.cells()[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            let (r, c) = ((idx / cols) as isize, (idx % cols) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                        continue;
                    }
                    let n = nr as usize * cols + nc as usize;
                    if grid.cells()[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
    }
    components
}

/// 1 when all material is one 8-connected component, else 0 (including empty).
pub fn connectivity_2d(grid: &BinaryGrid) -> f64 {
    if count_components(grid) == 1 {
        1.0
    } else {
        0.0
    }
}

/// True if some pair of material cells touch only at a corner.
pub fn has_diagonal_only_adjacency(grid: &BinaryGrid) -> bool {
    let (rows, cols) = (grid.rows(), grid.cols());
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols.saturating_sub(1) {
            let (a, b) = (grid.get(r, c), grid.get(r, c + 1));
            let (d, e) = (grid.get(r + 1, c), grid.get(r + 1, c + 1));
            if (a && e && !b && !d) || (b && d && !a && !e) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(art: &str) -> BinaryGrid {
        BinaryGrid::from_ascii(art).unwrap()
    }

    #[test]
    fn mirror_examples() {
        assert_eq!(mirror_y(&grid("#..")).cells(), grid("..#").cells());
        let sym = grid("#.#\n.#.");
        assert_eq!(mirror_y(&sym), sym);
    }

    #[test]
    fn single_cell_is_closed_unit_cube() {
        let mesh = extrude_to_mesh(&grid("#"), 1.0, 1.0).unwrap();
        assert_eq!(mesh.triangles.len(), 12);
        assert_eq!(mesh.vertices.len(), 8);
        assert!(is_watertight(&mesh).watertight);
        assert!((mesh.signed_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn edge_neighbours_share_internal_face() {
        let mesh = extrude_to_mesh(&grid("##"), 1.0, 1.0).unwrap();
        assert_eq!(mesh.triangles.len(), 20);
        assert!(is_watertight(&mesh).watertight);
        assert!((mesh.signed_volume() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_neighbours_are_non_manifold() {
        let mesh = extrude_to_mesh(&grid("#.\n.#"), 1.0, 1.0).unwrap();
        assert_eq!(mesh.triangles.len(), 24);
        let report = is_watertight(&mesh);
        assert!(!report.watertight);
        // The shared vertical edge is bounded by four side faces.
        assert!(report.defects.iter().any(|d| d.forward + d.backward == 4));
    }

    #[test]
    fn open_surface_is_not_watertight() {
        let mut mesh = extrude_to_mesh(&grid("#"), 1.0, 1.0).unwrap();
        mesh.triangles.pop();
        let report = is_watertight(&mesh);
        assert!(!report.watertight);
        assert!(report.defects.iter().any(|d| d.forward + d.backward == 1));
    }

    #[test]
    fn extrude_errors() {
        assert!(matches!(extrude_to_mesh(&grid("..\n.."), 1.0, 1.0), Err(Error::EmptyDesign)));
        assert!(extrude_to_mesh(&grid("#"), 0.0, 1.0).is_err());
        assert!(extrude_to_mesh(&grid("#"), 1.0, -2.0).is_err());
    }

    #[test]
    fn scales_apply() {
        let mesh = extrude_to_mesh(&grid("##"), 2.47, 17.9).unwrap();
        let max = |k: usize| mesh.vertices.iter().map(|v| v[k]).fold(f64::MIN, f64::max);
        assert!((max(0) - 4.94).abs() < 1e-12);
        assert!((max(1) - 2.47).abs() < 1e-12);
        assert!((max(2) - 17.9).abs() < 1e-12);
    }

    #[test]
    fn stl_length_and_determinism() {
        let mesh = extrude_to_mesh(&grid("#"), 1.0, 1.0).unwrap();
        let bytes = write_stl(&mesh).unwrap();
        assert_eq!(bytes.len(), 684);
        assert_eq!(bytes, write_stl(&mesh).unwrap());
        let empty = TriangleMesh { vertices: vec![], triangles: vec![] };
        assert!(matches!(write_stl(&empty), Err(Error::EmptyMesh)));
    }

    #[test]
    fn stl_normals_point_outward() {
        let mesh = extrude_to_mesh(&grid("#"), 1.0, 1.0).unwrap();
        for facet in read_stl(&write_stl(&mesh).unwrap()).unwrap() {
            let centroid: [f32; 3] = std::array::from_fn(|k| {
                facet.vertices.iter().map(|v| v[k]).sum::<f32>() / 3.0 - 0.5
            });
            let dot: f32 = (0..3).map(|k| centroid[k] * facet.normal[k]).sum();
            assert!(dot > 0.0);
        }
    }

    #[test]
    fn read_stl_rejects_truncation() {
        let mesh = extrude_to_mesh(&grid("#"), 1.0, 1.0).unwrap();
        let bytes = write_stl(&mesh).unwrap();
        assert!(read_stl(&bytes[..600]).is_err());
        assert!(read_stl(&bytes[..10]).is_err());
    }

    #[test]
    fn connectivity_examples() {
        assert_eq!(connectivity_2d(&grid("###\n###")), 1.0);
        assert_eq!(connectivity_2d(&grid("##.##\n##.##\n.....\n##.##")), 0.0);
        assert_eq!(connectivity_2d(&grid("#.\n.#")), 1.0);
        assert_eq!(connectivity_2d(&grid("#..\n#..\n.##")), 1.0);
        assert_eq!(connectivity_2d(&grid("...\n...")), 0.0);
    }

    fn binary_strategy() -> impl Strategy<Value = BinaryGrid> {
        (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
            proptest::collection::vec(any::<bool>(), r * c)
                .prop_map(move |cells| BinaryGrid::new(r, c, cells).unwrap())
        })
    }

    proptest! {
        #[test]
        fn mirror_is_involution(g in binary_strategy()) {
            prop_assert_eq!(mirror_y(&mirror_y(&g)), g);
        }

        #[test]
        fn connectivity_mirror_invariant(g in binary_strategy()) {
            prop_assert_eq!(connectivity_2d(&g), connectivity_2d(&mirror_y(&g)));
        }

        #[test]
        fn diagonal_only_adjacency_breaks_watertightness(g in binary_strategy()) {
            prop_assume!(g.material_count() > 0);
            let mesh = extrude_to_mesh(&g, 1.5, 3.0).unwrap();
            let wt = is_watertight(&mesh).watertight;
            if has_diagonal_only_adjacency(&g) {
                prop_assert!(!wt);
            } else {
                prop_assert!(wt);
            }
            prop_assert!((mesh.signed_volume() - 1.5 * 1.5 * 3.0 * g.material_count() as f64).abs() < 1e-9);
        }

        #[test]
        fn rectangles_are_watertight(r in 1usize..6, c in 1usize..6, pad in 0usize..2) {
            let g = Grid2::from_fn(r + 2 * pad, c + 2 * pad, |i, j| {
                i >= pad && i < r + pad && j >= pad && j < c + pad
            });
            prop_assert!(is_watertight(&extrude_to_mesh(&g, 1.0, 1.0).unwrap()).watertight);
        }

        #[test]
        fn stl_round_trip(g in binary_strategy(), sxy in 0.5f64..4.0, sz in 5.0f64..25.0) {
            prop_assume!(g.material_count() > 0);
            let mesh = extrude_to_mesh(&g, sxy, sz).unwrap();
            let bytes = write_stl(&mesh).unwrap();
            prop_assert_eq!(bytes.len(), 84 + 50 * mesh.triangles.len());
            let facets = read_stl(&bytes).unwrap();
            prop_assert_eq!(facets.len(), mesh.triangles.len());
            for (facet, &tri) in facets.iter().zip(&mesh.triangles) {
                let expected = mesh.corners(tri).map(|v| v.map(|x| x as f32));
                prop_assert_eq!(facet.vertices, expected);
            }
        }
    }
}
