//! Gmsh MSH v2 (ASCII) and OFF readers and writers.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{SurfaceMesh, Vec3};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Msh,
    Off,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "msh" => Some(Self::Msh),
            "off" => Some(Self::Off),
            _ => None,
        }
    }
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "msh" | "gmsh" => Ok(Self::Msh),
            "off" => Ok(Self::Off),
            _ => Err(Error::InvalidArgument(format!("unknown mesh format {s:?}"))),
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<SurfaceMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (v, t) = match format {
        MeshFormat::Msh => parse_msh(&text)?,
        MeshFormat::Off => parse_off(&text)?,
    };
    SurfaceMesh::new(v, t)
}

pub fn write_mesh(mesh: &SurfaceMesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        MeshFormat::Msh => format_msh(mesh),
        MeshFormat::Off => format_off(mesh),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Line-numbered, comment-free token lines.
fn content_lines(text: &str, comment: Option<char>) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            let l = match comment {
                Some(c) => l.split(c).next().unwrap_or(""),
                None => l,
            };
            (i + 1, l.trim())
        })
        .filter(|(_, l)| !l.is_empty())
        .collect()
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        msg: format!("expected {what}"),
    })
}

pub fn parse_off(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let lines = content_lines(text, Some('#'));
    let mut it = lines.into_iter();
    let (l0, head) = it.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let mut counts_line = if head == "OFF" {
        it.next().ok_or(Error::Parse { line: l0, msg: "missing counts".into() })?
    } else if let Some(rest) = head.strip_prefix("OFF") {
        (l0, rest.trim())
    } else {
        return Err(Error::Parse { line: l0, msg: "missing OFF header".into() });
    };
    if counts_line.1.is_empty() {
        counts_line = it.next().ok_or(Error::Parse { line: l0, msg: "missing counts".into() })?;
    }
    let mut toks = counts_line.1.split_whitespace();
    let nv: usize = num(toks.next(), counts_line.0, "vertex count")?;
    let nf: usize = num(toks.next(), counts_line.0, "face count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = it.next().ok_or(Error::Parse { line: counts_line.0, msg: "truncated vertex list".into() })?;
        let mut t = l.split_whitespace();
        vertices.push(Vec3::new(
            num(t.next(), ln, "x")?,
            num(t.next(), ln, "y")?,
            num(t.next(), ln, "z")?,
        ));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = it.next().ok_or(Error::Parse { line: counts_line.0, msg: "truncated face list".into() })?;
        let mut t = l.split_whitespace();
        let k: usize = num(t.next(), ln, "face size")?;
        if k != 3 {
            return Err(Error::Parse { line: ln, msg: format!("only triangles supported, got {k}-gon") });
        }
        triangles.push([num(t.next(), ln, "index")?, num(t.next(), ln, "index")?, num(t.next(), ln, "index")?]);
    }
    Ok((vertices, triangles))
}

pub fn parse_msh(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let lines = content_lines(text, None);
    let mut i = 0;
    let mut node_index: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut saw_format = false;
    while i < lines.len() {
        let (ln, l) = lines[i];
        match l {
            "$MeshFormat" => {
                let (fl, f) = *lines.get(i + 1).ok_or(Error::Parse { line: ln, msg: "missing format line".into() })?;
                let version: f64 = num(f.split_whitespace().next(), fl, "version")?;
                if !(2.0..3.0).contains(&version) {
                    return Err(Error::Parse { line: fl, msg: format!("unsupported MSH version {version}") });
                }
                if f.split_whitespace().nth(1) != Some("0") {
                    return Err(Error::Parse { line: fl, msg: "binary MSH not supported".into() });
                }
                saw_format = true;
                i += 2;
            }
            "$Nodes" => {
                let (cl, c) = lines[i + 1];
                let n: usize = num(Some(c), cl, "node count")?;
                for k in 0..n {
                    let (nl, nline) = *lines.get(i + 2 + k).ok_or(Error::Parse { line: cl, msg: "truncated nodes".into() })?;
                    let mut t = nline.split_whitespace();
                    let id: usize = num(t.next(), nl, "node id")?;
                    node_index.insert(id, vertices.len());
                    vertices.push(Vec3::new(num(t.next(), nl, "x")?, num(t.next(), nl, "y")?, num(t.next(), nl, "z")?));
                }
                i += 2 + n;
            }
            "$Elements" => {
                let (cl, c) = lines[i + 1];
                let n: usize = num(Some(c), cl, "element count")?;
                for k in 0..n {
                    let (el, eline) = *lines.get(i + 2 + k).ok_or(Error::Parse { line: cl, msg: "truncated elements".into() })?;
                    let toks: Vec<&str> = eline.split_whitespace().collect();
                    let etype: usize = num(toks.get(1).copied(), el, "element type")?;
                    if etype != 2 {
                        // points, lines and other entities are ignored
                        continue;
                    }
                    let ntags: usize = num(toks.get(2).copied(), el, "tag count")?;
                    let mut tri = [0usize; 3];
                    for (s, v) in tri.iter_mut().enumerate() {
                        let id: usize = num(toks.get(3 + ntags + s).copied(), el, "node reference")?;
                        *v = *node_index.get(&id).ok_or(Error::Parse {
                            line: el,
                            msg: format!("unknown node {id}"),
                        })?;
                    }
                    triangles.push(tri);
                }
                i += 2 + n;
            }
            _ => i += 1,
        }
    }
    if !saw_format {
        return Err(Error::Parse { line: 1, msg: "missing $MeshFormat".into() });
    }
    Ok((vertices, triangles))
}

fn format_off(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    writeln!(s, "OFF").unwrap();
    writeln!(s, "{} {} 0", mesh.vertices.len(), mesh.triangles.len()).unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z).unwrap();
    }
    for t in &mesh.triangles {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    s
}

fn format_msh(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    writeln!(s, "{}", mesh.vertices.len()).unwrap();
    for (i, v) in mesh.vertices.iter().enumerate() {
        writeln!(s, "{} {:?} {:?} {:?}", i + 1, v.x, v.y, v.z).unwrap();
    }
    s.push_str("$EndNodes\n$Elements\n");
    writeln!(s, "{}", mesh.triangles.len()).unwrap();
    for (i, t) in mesh.triangles.iter().enumerate() {
        writeln!(s, "{} 2 2 1 1 {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    s.push_str("$EndElements\n");
    s
}
