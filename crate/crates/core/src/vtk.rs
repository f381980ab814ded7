//! Legacy ASCII VTK export of the mesh and of discrete fields.

use std::io::Write;

use num_complex::Complex64 as C64;

use crate::edge_fem::{EdgeSpace, FeFunction};
use crate::error::Result;
use crate::geometry::CVec3;
use crate::mesh::Mesh;

const VTK_TETRA: u8 = 10;

fn write_mesh<W: Write>(w: &mut W, mesh: &Mesh, title: &str) -> Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.replace('\n', " "))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.num_vertices())?;
    for p in &mesh.vertices {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    writeln!(w, "CELLS {} {}", mesh.num_tets(), 5 * mesh.num_tets())?;
    for t in &mesh.tets {
        writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.num_tets())?;
    for _ in &mesh.tets {
        writeln!(w, "{VTK_TETRA}")?;
    }
    Ok(())
}

fn write_vectors<W: Write>(
    w: &mut W,
    name: &str,
    values: &[CVec3],
    part: fn(C64) -> f64,
) -> Result<()> {
    writeln!(w, "VECTORS {name} double")?;
    for v in values {
        writeln!(w, "{} {} {}", part(v.x), part(v.y), part(v.z))?;
    }
    Ok(())
}

/// Vertex values (averaged over incident tets, since normal components jump)
/// and per-tet curls of `v`.
pub fn sample_field(space: &EdgeSpace, v: &FeFunction) -> (Vec<CVec3>, Vec<CVec3>) {
    let mesh = &space.mesh;
    let mut point = vec![CVec3::zeros(); mesh.num_vertices()];
    let mut count = vec![0usize; mesh.num_vertices()];
    let mut cell = Vec::with_capacity(mesh.num_tets());
    for (t, verts) in mesh.tets.iter().enumerate() {
        for (k, &vi) in verts.iter().enumerate() {
            let mut bary = [0.0; 4];
            bary[k] = 1.0;
            point[vi] += space.eval_bary(v, t, &bary).0;
            count[vi] += 1;
        }
        cell.push(space.curl_on(v, t));
    }
    for (p, c) in point.iter_mut().zip(&count) {
        *p /= C64::new(*c as f64, 0.0);
    }
    (point, cell)
}

/// Mesh only.
pub fn write_mesh_vtk<W: Write>(w: &mut W, mesh: &Mesh) -> Result<()> {
    write_mesh(w, mesh, "cub6 mesh")
}

/// Mesh with point data `E_re`, `E_im` and cell data `curlE_re`, `curlE_im`.
pub fn write_field_vtk<W: Write>(
    w: &mut W,
    space: &EdgeSpace,
    v: &FeFunction,
    title: &str,
) -> Result<()> {
    write_mesh(w, &space.mesh, title)?;
    let (point, cell) = sample_field(space, v);
    writeln!(w, "POINT_DATA {}", point.len())?;
    write_vectors(w, "E_re", &point, |z| z.re)?;
    write_vectors(w, "E_im", &point, |z| z.im)?;
    writeln!(w, "CELL_DATA {}", cell.len())?;
    write_vectors(w, "curlE_re", &cell, |z| z.re)?;
    write_vectors(w, "curlE_im", &cell, |z| z.im)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::mesh::BoxDomain;

    #[test]
    fn field_file_layout() {
        let space = EdgeSpace::new(Mesh::cub6(1, BoxDomain::unit()).unwrap()).unwrap();
        let v = space.interpolate(&|x: &Vec3| {
            CVec3::new(C64::new(0.0, x.y), C64::new(x.x, 0.0), C64::new(1.0, 0.0))
        });
        let mut buf = Vec::new();
        write_field_vtk(&mut buf, &space, &v, "test").unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert!(s.contains("POINTS 8 double"));
        assert!(s.contains("CELLS 6 30"));
        assert!(s.contains("POINT_DATA 8"));
        assert!(s.contains("CELL_DATA 6"));
        for name in ["E_re", "E_im", "curlE_re", "curlE_im"] {
            assert!(s.contains(&format!("VECTORS {name} double")));
        }
        // curl (iy, x, 1) = (0, 0, 1 − i)
        let first = |name: &str| -> Vec<f64> {
            let i = lines
                .iter()
                .position(|l| *l == format!("VECTORS {name} double"))
                .unwrap();
            lines[i + 1]
                .split_whitespace()
                .map(|t| t.parse().unwrap())
                .collect()
        };
        for (got, want) in first("curlE_re")
            .iter()
            .zip([0.0, 0.0, 1.0])
            .chain(first("curlE_im").iter().zip([0.0, 0.0, -1.0]))
        {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn continuous_linear_field_is_reproduced_at_vertices() {
        let space = EdgeSpace::new(Mesh::cub6(2, BoxDomain::unit()).unwrap()).unwrap();
        let f = |x: &Vec3| CVec3::new(C64::new(x.z, 1.0), C64::new(2.0, x.x), C64::new(x.y, 0.0));
        let v = space.interpolate(&f);
        let (point, _) = sample_field(&space, &v);
        for (p, x) in point.iter().zip(&space.mesh.vertices) {
            assert!((p - f(x)).norm() < 1e-12);
        }
    }
}
