//! Meshing of implicit polynomial surfaces `P(x, y, z) = 0` by marching
//! cubes.
//!
//! The triangulation of each cell is obtained by tracing the oriented
//! interface segments on the six cell faces into closed loops. Faces whose
//! four corner signs alternate are resolved by the asymptotic decider (the
//! sign of the bilinear interpolant at its saddle), which depends only on
//! the shared face values, so adjacent cells always make the same choice
//! and the output is watertight by construction. Crossing positions use
//! linear interpolation along grid edges and are computed once per edge.

use super::{MeshError, TriMesh};
use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

/// Sparse polynomial in three variables with `f64` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    // exponents (x, y, z) -> coefficient, zero coefficients pruned
    terms: BTreeMap<[u16; 3], f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { terms: BTreeMap::new() }
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Polynomial::zero();
        p.add_term([0, 0, 0], c);
        p
    }

    pub fn variable(axis: usize) -> Self {
        let mut e = [0u16; 3];
        e[axis] = 1;
        let mut p = Polynomial::zero();
        p.add_term(e, 1.0);
        p
    }

    fn add_term(&mut self, e: [u16; 3], c: f64) {
        let entry = self.terms.entry(e).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (&e, &c) in &other.terms {
            out.add_term(e, c);
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial { terms: self.terms.iter().map(|(&e, &c)| (e, -c)).collect() }
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (&ea, &ca) in &self.terms {
            for (&eb, &cb) in &other.terms {
                out.add_term([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]], ca * cb);
            }
        }
        out
    }

    pub fn powi(&self, n: u32) -> Polynomial {
        let mut out = Polynomial::constant(1.0);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Total degree of the highest nonzero term; 0 for constants and the
    /// zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| (e[0] + e[1] + e[2]) as u32).max().unwrap_or(0)
    }

    pub fn eval(&self, p: &Point3<f64>) -> f64 {
        let mut acc = 0.0;
        for (&e, &c) in &self.terms {
            acc += c * p.x.powi(e[0] as i32) * p.y.powi(e[1] as i32) * p.z.powi(e[2] as i32);
        }
        acc
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&e, &c) in self.terms.iter().rev() {
            if first {
                write!(f, "{c}")?;
                first = false;
            } else if c < 0.0 {
                write!(f, " - {}", -c)?;
            } else {
                write!(f, " + {c}")?;
            }
            for (axis, name) in ["x", "y", "z"].iter().enumerate() {
                if e[axis] == 1 {
                    write!(f, "*{name}")?;
                } else if e[axis] > 1 {
                    write!(f, "*{name}^{}", e[axis])?;
                }
            }
        }
        Ok(())
    }
}

impl FromStr for Polynomial {
    type Err = MeshError;

    /// Parses `c*x^a*y^b*z^c` monomials combined with `+`, `-`, `*`, `^`
    /// and parentheses, e.g. `(x^2+y^2+z^2+3)^2 - 16*(x^2+y^2)`.
    fn from_str(s: &str) -> Result<Self, MeshError> {
        let tokens = tokenize(s)?;
        let mut parser = Parser { tokens, pos: 0 };
        let poly = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(MeshError::Parse(format!(
                "unexpected trailing token {:?} in polynomial",
                parser.tokens[parser.pos]
            )));
        }
        Ok(poly)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<Token>, MeshError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            'x' => {
                out.push(Token::Var(0));
                i += 1;
            }
            'y' => {
                out.push(Token::Var(1));
                i += 1;
            }
            'z' => {
                out.push(Token::Var(2));
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent part of a float literal
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let tok = &s[start..i];
                let v: f64 = tok
                    .parse()
                    .map_err(|_| MeshError::Parse(format!("bad number literal {tok:?}")))?;
                out.push(Token::Num(v));
            }
            other => return Err(MeshError::Parse(format!("unexpected character {other:?} in polynomial"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<Polynomial, MeshError> {
        let mut negate = false;
        match self.peek() {
            Some(Token::Plus) => self.pos += 1,
            Some(Token::Minus) => {
                negate = true;
                self.pos += 1;
            }
            _ => {}
        }
        let mut acc = self.term()?;
        if negate {
            acc = acc.neg();
        }
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, MeshError> {
        let mut acc = self.factor()?;
        while let Some(Token::Star) = self.peek() {
            self.pos += 1;
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial, MeshError> {
        let base = self.primary()?;
        if let Some(Token::Caret) = self.peek() {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Token::Num(n)) if n >= 0.0 && n.fract() == 0.0 && n <= 64.0 => {
                    self.pos += 1;
                    Ok(base.powi(n as u32))
                }
                other => Err(MeshError::Parse(format!(
                    "exponent must be a small nonnegative integer, got {other:?}"
                ))),
            }
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Polynomial, MeshError> {
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Polynomial::constant(v))
            }
            Some(Token::Var(a)) => {
                self.pos += 1;
                Ok(Polynomial::variable(a))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Token::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(MeshError::Parse("missing closing parenthesis".into())),
                }
            }
            Some(Token::Minus) => {
                self.pos += 1;
                Ok(self.primary()?.neg())
            }
            other => Err(MeshError::Parse(format!("unexpected token {other:?} in polynomial"))),
        }
    }
}

// Cell corner c sits at offset (c & 1, (c >> 1) & 1, (c >> 2) & 1).
// The 12 cell edges, as corner pairs (lower corner first):
const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7), // x-parallel
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7), // y-parallel
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7), // z-parallel
];

// Face corner cycles, counterclockwise as seen from outside the cell.
const FACES: [[usize; 4]; 6] = [
    [0, 4, 6, 2], // x = 0
    [1, 3, 7, 5], // x = 1
    [1, 5, 4, 0], // y = 0
    [2, 6, 7, 3], // y = 1
    [0, 2, 3, 1], // z = 0
    [4, 5, 7, 6], // z = 1
];

fn edge_id(a: usize, b: usize) -> usize {
    let key = (a.min(b), a.max(b));
    EDGES.iter().position(|&e| e == key).expect("corner pair is a cell edge")
}

/// Meshes the zero set of `poly` inside `bbox` by marching cubes.
///
/// `resolution` is the number of cells along the longest bbox axis; the
/// other axes get proportionally many cells so cells are near-cubic. The
/// zero set must be compact and strictly inside the box: a sign change on
/// the boundary lattice is rejected.
pub fn gen_implicit(
    poly: &Polynomial,
    bbox: (Point3<f64>, Point3<f64>),
    resolution: usize,
) -> Result<TriMesh, MeshError> {
    let (lo, hi) = bbox;
    let ext = hi - lo;
    if !(ext.x > 0.0 && ext.y > 0.0 && ext.z > 0.0) {
        return Err(MeshError::Degenerate("bbox must have positive extent".into()));
    }
    if resolution < 2 {
        return Err(MeshError::Degenerate(format!("resolution {resolution} < 2")));
    }
    if resolution > 1024 {
        return Err(MeshError::Degenerate(format!("resolution {resolution} > 1024 (memory guard)")));
    }
    let longest = ext.x.max(ext.y).max(ext.z);
    let cells = |e: f64| ((resolution as f64 * e / longest).round() as usize).max(2);
    let (nx, ny, nz) = (cells(ext.x), cells(ext.y), cells(ext.z));
    let h = Vector3::new(ext.x / nx as f64, ext.y / ny as f64, ext.z / nz as f64);

    let sample_at = |i: usize, j: usize, k: usize| {
        Point3::new(lo.x + h.x * i as f64, lo.y + h.y * j as f64, lo.z + h.z * k as f64)
    };
    let sid = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;

    let mut values: Vec<f64> = (0..=nz)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut slab = Vec::with_capacity((nx + 1) * (ny + 1));
            for j in 0..=ny {
                for i in 0..=nx {
                    slab.push(poly.eval(&sample_at(i, j, k)));
                }
            }
            slab
        })
        .collect();

    // Exact zeros at lattice points would put crossings on shared corners;
    // nudge them off the level set.
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(MeshError::EmptyZeroSet);
    }
    for v in values.iter_mut() {
        if *v == 0.0 {
            *v = scale * 1e-14;
        }
    }

    // The zero set must not reach the boundary lattice planes.
    let boundary_sign = values[0] < 0.0;
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                if i == 0 || j == 0 || k == 0 || i == nx || j == ny || k == nz {
                    if (values[sid(i, j, k)] < 0.0) != boundary_sign {
                        return Err(MeshError::ZeroSetTouchesBoundary);
                    }
                }
            }
        }
    }

    // Crossing vertices are shared through a per-edge map keyed by the
    // lower sample and the edge axis.
    let mut edge_vertex: HashMap<(usize, usize, usize, u8), usize> = HashMap::new();
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    let corner_offset = |c: usize| (c & 1, (c >> 1) & 1, (c >> 2) & 1);

    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let mut vals = [0.0f64; 8];
                let mut inside_mask = 0u8;
                for c in 0..8 {
                    let (dx, dy, dz) = corner_offset(c);
                    let v = values[sid(i + dx, j + dy, k + dz)];
                    vals[c] = v;
                    if v < 0.0 {
                        inside_mask |= 1 << c;
                    }
                }
                if inside_mask == 0 || inside_mask == 0xff {
                    continue;
                }

                // Directed interface segments on the six faces:
                // next[start edge] = end edge.
                let mut next = [usize::MAX; 12];
                for face in &FACES {
                    trace_face(face, &vals, &mut next);
                }

                // Coordinates of the crossing on each crossed cell edge.
                let mut edge_vid = [usize::MAX; 12];
                for (e, &(ca, cb)) in EDGES.iter().enumerate() {
                    let (fa, fb) = (vals[ca], vals[cb]);
                    if (fa < 0.0) == (fb < 0.0) {
                        continue;
                    }
                    let (dx, dy, dz) = corner_offset(ca);
                    let axis = (e / 4) as u8;
                    let key = (i + dx, j + dy, k + dz, axis);
                    let vid = *edge_vertex.entry(key).or_insert_with(|| {
                        // Keep crossings off the lattice corners: a crossing
                        // essentially at a shared corner makes sliver
                        // triangles that validation rejects. The clamp moves
                        // vertices by at most 0.1% of a cell.
                        let t = (fa / (fa - fb)).clamp(1e-3, 1.0 - 1e-3);
                        let base = sample_at(i + dx, j + dy, k + dz);
                        let mut p = base;
                        p[axis as usize] += t * h[axis as usize];
                        vertices.push(p);
                        vertices.len() - 1
                    });
                    edge_vid[e] = vid;
                }

                // Walk the segment permutation into closed loops and fan-
                // triangulate each one. Loops are traced with the interior
                // on the left; reversing makes triangle normals point
                // toward positive field values.
                let mut visited = [false; 12];
                for start in 0..12 {
                    if next[start] == usize::MAX || visited[start] {
                        continue;
                    }
                    let mut loop_edges = Vec::with_capacity(7);
                    let mut e = start;
                    loop {
                        visited[e] = true;
                        loop_edges.push(e);
                        e = next[e];
                        if e == start {
                            break;
                        }
                    }
                    let ids: Vec<usize> = loop_edges.iter().map(|&e| edge_vid[e]).collect();
                    for t in 1..ids.len() - 1 {
                        faces.push([ids[0], ids[t + 1], ids[t]]);
                    }
                }
            }
        }
    }

    if faces.is_empty() {
        return Err(MeshError::EmptyZeroSet);
    }
    TriMesh::new(vertices, faces)
}

/// Emits the directed interface segments of one cell face into `next`.
///
/// Walking the face corners counterclockwise (seen from outside the cell),
/// a crossing where the field goes negative-to-positive starts a segment
/// and a positive-to-negative crossing ends one. With four crossings the
/// pairing is ambiguous and the asymptotic decider chooses: if the bilinear
/// saddle value is negative the two interior corners join and each start
/// connects to the cyclically next crossing, otherwise to the previous one.
fn trace_face(face: &[usize; 4], vals: &[f64; 8], next: &mut [usize; 12]) {
    // crossing = (cell edge, starts_segment)
    let mut crossings: [(usize, bool); 4] = [(0, false); 4];
    let mut n = 0;
    for s in 0..4 {
        let (ca, cb) = (face[s], face[(s + 1) % 4]);
        let (ia, ib) = (vals[ca] < 0.0, vals[cb] < 0.0);
        if ia == ib {
            continue;
        }
        crossings[n] = (edge_id(ca, cb), ia);
        n += 1;
    }
    match n {
        0 => {}
        2 => {
            let (e0, start0) = crossings[0];
            let (e1, _) = crossings[1];
            if start0 {
                next[e0] = e1;
            } else {
                next[e1] = e0;
            }
        }
        4 => {
            let (a, b, c, d) =
                (vals[face[0]], vals[face[1]], vals[face[2]], vals[face[3]]);
            let saddle = (a * c - b * d) / (a + c - b - d);
            let join = saddle < 0.0;
            for p in 0..4 {
                let (e, starts) = crossings[p];
                if !starts {
                    continue;
                }
                let q = if join { (p + 1) % 4 } else { (p + 3) % 4 };
                next[e] = crossings[q].0;
            }
        }
        _ => unreachable!("a face has 0, 2 or 4 sign changes"),
    }
}
