//! ASCII OFF / OBJ / PLY readers and a PLY writer with optional vertex colors.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;

use super::TriangleMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "off" => Some(MeshFormat::Off),
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::Ply),
            _ => None,
        }
    }
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(MeshFormat::Off),
            "obj" => Ok(MeshFormat::Obj),
            "ply" => Ok(MeshFormat::Ply),
            other => Err(Error::TypeError {
                flag: "format".into(),
                message: format!("unknown mesh format {other:?}"),
            }),
        }
    }
}

/// Reads and validates a mesh. The format is taken from `format` or, when `None`,
/// from the file extension.
pub fn load_mesh(path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let format = match format.or_else(|| MeshFormat::from_path(path)) {
        Some(f) => f,
        None => {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 0,
                message: "cannot infer mesh format from extension".into(),
            })
        }
    };
    let name = path.display().to_string();
    let (positions, faces) = match format {
        MeshFormat::Off => parse_off(&text, &name)?,
        MeshFormat::Obj => parse_obj(&text, &name)?,
        MeshFormat::Ply => parse_ply(&text, &name)?,
    };
    TriangleMesh::new(positions, faces)
}

type RawMesh = (Vec<Vector3<f64>>, Vec<[usize; 3]>);

fn perr(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_num<T: FromStr>(tok: Option<&str>, path: &str, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(path, line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| perr(path, line, format!("cannot parse {what} from {tok:?}")))
}

/// Fan-triangulates a polygon.
fn push_polygon(faces: &mut Vec<[usize; 3]>, poly: &[usize]) {
    for i in 1..poly.len().saturating_sub(1) {
        faces.push([poly[0], poly[i], poly[i + 1]]);
    }
}

/// Lines with comments stripped and blanks skipped, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub fn parse_off(text: &str, path: &str) -> Result<RawMesh> {
    let mut lines = content_lines(text);
    let (mut ln, mut line) = lines.next().ok_or_else(|| perr(path, 0, "empty file"))?;
    if line.starts_with("OFF") {
        let rest = line[3..].trim();
        if rest.is_empty() {
            (ln, line) = lines.next().ok_or_else(|| perr(path, ln, "missing counts"))?;
        } else {
            line = rest;
        }
    }
    let mut tok = line.split_whitespace();
    let nv: usize = parse_num(tok.next(), path, ln, "vertex count")?;
    let nf: usize = parse_num(tok.next(), path, ln, "face count")?;

    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| perr(path, ln, "unexpected end of file in vertex list"))?;
        let mut t = line.split_whitespace();
        let x = parse_num(t.next(), path, ln, "x")?;
        let y = parse_num(t.next(), path, ln, "y")?;
        let z = parse_num(t.next(), path, ln, "z")?;
        positions.push(Vector3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| perr(path, ln, "unexpected end of file in face list"))?;
        let mut t = line.split_whitespace();
        let count: usize = parse_num(t.next(), path, ln, "face vertex count")?;
        if count < 3 {
            return Err(perr(path, ln, format!("face with {count} vertices")));
        }
        let poly = (0..count)
            .map(|_| parse_num(t.next(), path, ln, "face index"))
            .collect::<Result<Vec<usize>>>()?;
        push_polygon(&mut faces, &poly);
    }
    Ok((positions, faces))
}

pub fn parse_obj(text: &str, path: &str) -> Result<RawMesh> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in content_lines(text) {
        let mut t = line.split_whitespace();
        match t.next() {
            Some("v") => {
                let x = parse_num(t.next(), path, ln, "x")?;
                let y = parse_num(t.next(), path, ln, "y")?;
                let z = parse_num(t.next(), path, ln, "z")?;
                positions.push(Vector3::new(x, y, z));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for item in t {
                    let idx = item.split('/').next().unwrap_or("");
                    let raw: i64 = parse_num(Some(idx), path, ln, "face index")?;
                    let resolved = if raw > 0 {
                        raw - 1
                    } else if raw < 0 {
                        positions.len() as i64 + raw
                    } else {
                        return Err(perr(path, ln, "OBJ indices are 1-based; found 0"));
                    };
                    if resolved < 0 {
                        return Err(perr(path, ln, format!("relative index {raw} out of range")));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(perr(path, ln, "face with fewer than 3 vertices"));
                }
                push_polygon(&mut faces, &poly);
            }
            _ => {}
        }
    }
    Ok((positions, faces))
}

pub fn parse_ply(text: &str, path: &str) -> Result<RawMesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(perr(path, 1, "missing 'ply' magic")),
    }
    #[derive(PartialEq)]
    enum Section {
        None,
        Vertex,
        Face,
        Other,
    }
    let mut section = Section::None;
    let (mut nv, mut nf) = (0usize, 0usize);
    let mut vertex_props: Vec<String> = Vec::new();
    let mut last = 1;
    loop {
        let (ln, line) = lines.next().ok_or_else(|| perr(path, last, "missing end_header"))?;
        last = ln;
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(perr(path, ln, format!("unsupported PLY format {fmt}")))
            }
            ["element", "vertex", n] => {
                section = Section::Vertex;
                nv = parse_num(Some(n), path, ln, "vertex count")?;
            }
            ["element", "face", n] => {
                section = Section::Face;
                nf = parse_num(Some(n), path, ln, "face count")?;
            }
            ["element", ..] => section = Section::Other,
            ["property", "list", ..] => {}
            ["property", _ty, name] if section == Section::Vertex => {
                vertex_props.push(name.to_string())
            }
            ["end_header"] => break,
            _ => {}
        }
    }
    let col = |name: &str| vertex_props.iter().position(|p| p == name);
    let (ix, iy, iz) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(perr(path, last, "vertex element lacks x/y/z properties")),
    };
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| perr(path, last, "unexpected end of file in vertex list"))?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        let get = |i: usize, w: &str| parse_num::<f64>(vals.get(i).copied(), path, ln, w);
        positions.push(Vector3::new(get(ix, "x")?, get(iy, "y")?, get(iz, "z")?));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| perr(path, last, "unexpected end of file in face list"))?;
        let mut t = line.split_whitespace();
        let count: usize = parse_num(t.next(), path, ln, "face vertex count")?;
        let poly = (0..count)
            .map(|_| parse_num(t.next(), path, ln, "face index"))
            .collect::<Result<Vec<usize>>>()?;
        if poly.len() < 3 {
            return Err(perr(path, ln, "face with fewer than 3 vertices"));
        }
        push_polygon(&mut faces, &poly);
    }
    Ok((positions, faces))
}

/// Writes an ASCII PLY, optionally with one RGB triple per vertex.
pub fn write_ply(
    path: impl AsRef<Path>,
    mesh: &TriangleMesh,
    colors: Option<&[[u8; 3]]>,
) -> Result<()> {
    let path = path.as_ref();
    if let Some(c) = colors {
        if c.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch(format!(
                "{} colors for {} vertices",
                c.len(),
                mesh.num_vertices()
            )));
        }
    }
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", mesh.num_vertices());
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    if colors.is_some() {
        s.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    let _ = writeln!(s, "element face {}", mesh.num_faces());
    s.push_str("property list uchar int vertex_indices\nend_header\n");
    for (i, p) in mesh.positions().iter().enumerate() {
        let _ = write!(s, "{} {} {}", p.x, p.y, p.z);
        if let Some(c) = colors {
            let _ = write!(s, " {} {} {}", c[i][0], c[i][1], c[i][2]);
        }
        s.push('\n');
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Writes an ASCII OFF file.
pub fn write_off(path: impl AsRef<Path>, mesh: &TriangleMesh) -> Result<()> {
    let path = path.as_ref();
    let mut s = format!("OFF\n{} {} 0\n", mesh.num_vertices(), mesh.num_faces());
    for p in mesh.positions() {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Colors each vertex by its normalized coordinates (bounding-box mapped to RGB).
pub fn coordinate_colors(mesh: &TriangleMesh) -> Vec<[u8; 3]> {
    let p = mesh.positions();
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for q in p {
        lo = lo.inf(q);
        hi = hi.sup(q);
    }
    let span = (hi - lo).map(|d| if d > 0.0 { d } else { 1.0 });
    p.iter()
        .map(|q| {
            let t = (q - lo).component_div(&span);
            [
                (t.x * 255.0).round() as u8,
                (t.y * 255.0).round() as u8,
                (t.z * 255.0).round() as u8,
            ]
        })
        .collect()
}

/// Transfers per-vertex colors of the target to the source through `targets`.
pub fn transfer_colors(target_colors: &[[u8; 3]], targets: &[usize]) -> Vec<[u8; 3]> {
    targets.iter().map(|&t| target_colors[t]).collect()
}
