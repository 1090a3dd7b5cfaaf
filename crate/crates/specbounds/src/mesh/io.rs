//! ASCII OFF and OBJ input, OFF output. Triangles only.
//!
//! Floats are emitted with 17 significant digits so that write/read
//! round-trips are bit-identical on vertex coordinates.

use super::{MeshError, TriMesh};
use crate::report::fmt_f64;
use nalgebra::Point3;
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    /// Guesses from the file extension; defaults to OFF.
    pub fn from_path(path: &Path) -> MeshFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("obj") => MeshFormat::Obj,
            _ => MeshFormat::Off,
        }
    }
}

/// Loads and validates a mesh file.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh, MeshError> {
    let text = fs::read_to_string(path)?;
    match format {
        MeshFormat::Off => parse_off(&text),
        MeshFormat::Obj => parse_obj(&text),
    }
}

pub fn load_off(path: &Path) -> Result<TriMesh, MeshError> {
    load_mesh(path, MeshFormat::Off)
}

pub fn load_obj(path: &Path) -> Result<TriMesh, MeshError> {
    load_mesh(path, MeshFormat::Obj)
}

pub fn save_off(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    let mut out = String::new();
    out.push_str("OFF\n");
    out.push_str(&format!("{} {} {}\n", mesh.vertex_count(), mesh.face_count(), mesh.edge_count()));
    for v in mesh.vertices() {
        out.push_str(&format!("{} {} {}\n", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z)));
    }
    for f in mesh.faces() {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

fn meaningful_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(|l| {
        let l = l.split('#').next().unwrap_or("");
        l.trim()
    }).filter(|l| !l.is_empty())
}

pub fn parse_off(text: &str) -> Result<TriMesh, MeshError> {
    let mut lines = meaningful_lines(text);
    let header = lines.next().ok_or_else(|| MeshError::Parse("empty OFF file".into()))?;
    if header != "OFF" {
        return Err(MeshError::Parse(format!("expected OFF header, got {header:?}")));
    }
    let counts = lines.next().ok_or_else(|| MeshError::Parse("missing OFF counts".into()))?;
    let mut it = counts.split_whitespace();
    let nv: usize = parse_tok(it.next(), "vertex count")?;
    let nf: usize = parse_tok(it.next(), "face count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| MeshError::Parse("truncated vertex list".into()))?;
        let mut t = line.split_whitespace();
        let x: f64 = parse_tok(t.next(), "x")?;
        let y: f64 = parse_tok(t.next(), "y")?;
        let z: f64 = parse_tok(t.next(), "z")?;
        vertices.push(Point3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let line = lines.next().ok_or_else(|| MeshError::Parse("truncated face list".into()))?;
        let mut t = line.split_whitespace();
        let arity: usize = parse_tok(t.next(), "face arity")?;
        if arity != 3 {
            return Err(MeshError::Parse(format!("only triangles supported, got {arity}-gon")));
        }
        let a: usize = parse_tok(t.next(), "face index")?;
        let b: usize = parse_tok(t.next(), "face index")?;
        let c: usize = parse_tok(t.next(), "face index")?;
        faces.push([a, b, c]);
    }
    TriMesh::new(vertices, faces)
}

pub fn parse_obj(text: &str) -> Result<TriMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for line in meaningful_lines(text) {
        let mut t = line.split_whitespace();
        match t.next() {
            Some("v") => {
                let x: f64 = parse_tok(t.next(), "x")?;
                let y: f64 = parse_tok(t.next(), "y")?;
                let z: f64 = parse_tok(t.next(), "z")?;
                vertices.push(Point3::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<usize> = t
                    .map(|w| {
                        let first = w.split('/').next().unwrap_or("");
                        first.parse::<usize>().map_err(|_| {
                            MeshError::Parse(format!("bad face index {w:?}"))
                        })
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(MeshError::Parse(format!(
                        "only triangles supported, got {}-gon",
                        idx.len()
                    )));
                }
                if idx.iter().any(|&i| i == 0) {
                    return Err(MeshError::Parse("OBJ face indices are 1-based".into()));
                }
                faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            // vn/vt/usemtl/o/g/s lines carry no geometry we need.
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T, MeshError> {
    let tok = tok.ok_or_else(|| MeshError::Parse(format!("missing {what}")))?;
    tok.parse().map_err(|_| MeshError::Parse(format!("bad {what}: {tok:?}")))
}
