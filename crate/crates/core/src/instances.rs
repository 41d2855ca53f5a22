//! Problem instances: the data type, a text file format, and a seeded
//! generator of portfolio selection problems.
//!
//! # Instance data
//!
//! An instance is
//!
//! ```text
//!     min  y'Qy + g'y + h'x
//!     s.t. A y <= b           (m1 rows)
//!          C y <= D x         (m2 linking rows)
//!          y_i (1 - x_i) = 0
//!          sum_i x_i <= k     (optional cardinality budget)
//!          x in {0,1}^n
//! ```
//!
//! with `Q` symmetric positive definite. Equalities are encoded as pairs
//! of opposing inequality rows.
//!
//! # File format (`.miqp`)
//!
//! Plain UTF-8 text. Lines starting with `#` and blank lines are skipped.
//! Floats are written in shortest round-trip form, so write-then-read
//! reproduces the instance bit for bit:
//!
//! ```text
//! miqp 1
//! name pard-n2-k2-s7
//! seed 7                 # optional
//! rng chacha12           # optional
//! n 2
//! m1 1
//! m2 2
//! k 2                    # omitted when absent
//! Q                      # n dense rows
//! 2 0
//! 0 2
//! g
//! -2 -2
//! h
//! 0 0
//! A 2                    # nonzero count, then "row col value" triplets
//! 0 0 1
//! 0 1 1
//! b
//! 1
//! C 2
//! 0 0 1
//! 1 1 1
//! D 2
//! 0 0 1
//! 1 1 1
//! end
//! ```
//!
//! The `A`/`b` sections are omitted when `m1 = 0`, and `C`/`D` when
//! `m2 = 0`.
//!
//! # Portfolio generator
//!
//! [`generate_portfolio`] draws the classical cardinality-constrained
//! portfolio model: minimize `y'Qy` subject to a fully invested budget
//! `sum y = 1`, a minimum expected return `mu'y >= rho`, and semicontinuous
//! holdings `alpha_i x_i <= y_i <= u_i x_i`. Parameters are uniform draws
//! (`mu_i, rho` from `[0.002, 0.01]`, `alpha_i` from `[0.075, 0.125]`,
//! `u_i` from `[0.375, 0.425]`); `Q` has integer entries, off-diagonal
//! from `{1..10}` and diagonal from `{10n..20n}`, which makes it strictly
//! diagonally dominant and hence positive definite.
//!
//! Draws come from a counter-based generator (ChaCha12) with one stream
//! per field, so adding fields never perturbs existing ones and the same
//! seed reproduces the same instance on any platform.

use crate::linalg::{min_eigenvalue_bound, DenseMatrix};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Q is not symmetric at entries ({i},{j}) and ({j},{i})")]
    NotSymmetric { i: usize, j: usize },
    #[error("Q is not positive definite (eigenvalue bound {bound:e})")]
    NotPd { bound: f64 },
    #[error("could not generate a feasible instance after {attempts} reseeds")]
    GenerationFailed { attempts: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One mixed-integer QP instance; see the module docs for the model.
#[derive(Debug, Clone, PartialEq)]
pub struct MiqpInstance {
    pub name: String,
    pub n: usize,
    pub q: DenseMatrix,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub c: DenseMatrix,
    pub d: DenseMatrix,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    /// Identifier of the generator that produced the instance.
    pub rng: Option<String>,
}

impl MiqpInstance {
    pub fn m1(&self) -> usize {
        self.b.len()
    }

    pub fn m2(&self) -> usize {
        self.c.rows()
    }

    /// Structural and numerical sanity: consistent shapes, finite data,
    /// `Q` symmetric and positive definite.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let n = self.n;
        if n == 0 {
            return Err(InstanceError::DimensionMismatch("n must be at least 1".into()));
        }
        let shape_err = |what: &str| InstanceError::DimensionMismatch(what.to_string());
        if self.q.rows() != n || self.q.cols() != n {
            return Err(shape_err("Q must be n x n"));
        }
        if self.g.len() != n || self.h.len() != n {
            return Err(shape_err("g and h must have length n"));
        }
        if self.a.rows() != self.b.len() || (self.a.rows() > 0 && self.a.cols() != n) {
            return Err(shape_err("A must be m1 x n with matching b"));
        }
        if self.c.rows() != self.d.rows()
            || (self.c.rows() > 0 && (self.c.cols() != n || self.d.cols() != n))
        {
            return Err(shape_err("C and D must both be m2 x n"));
        }
        if let Some(k) = self.k {
            if k > n {
                return Err(shape_err("k must not exceed n"));
            }
        }
        let finite = |s: &[f64]| s.iter().all(|v| v.is_finite());
        if !finite(self.q.data())
            || !finite(&self.g)
            || !finite(&self.h)
            || !finite(self.a.data())
            || !finite(&self.b)
            || !finite(self.c.data())
            || !finite(self.d.data())
        {
            return Err(shape_err("instance data must be finite"));
        }
        let (i, j, asym) = self.q.max_asymmetry();
        if asym > 0.0 {
            return Err(InstanceError::NotSymmetric { i, j });
        }
        // Dominance is a free PD certificate for generated instances; fall
        // back to the certified eigenvalue bound otherwise.
        let dominant = (0..n).all(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| self.q[(i, j)].abs()).sum();
            self.q[(i, i)] > off
        });
        if !dominant {
            let bound = min_eigenvalue_bound(&self.q);
            if bound + 1e-6 * self.q.max_abs() <= 0.0 {
                return Err(InstanceError::NotPd { bound });
            }
        }
        Ok(())
    }
}

// --- text format -----------------------------------------------------------

fn push_vector(out: &mut String, label: &str, v: &[f64]) {
    out.push_str(label);
    out.push('\n');
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&x.to_string());
    }
    out.push('\n');
}

fn push_triplets(out: &mut String, label: &str, m: &DenseMatrix) {
    let mut nnz = 0usize;
    for i in 0..m.rows() {
        nnz += m.row(i).iter().filter(|&&v| v != 0.0).count();
    }
    out.push_str(&format!("{label} {nnz}\n"));
    for i in 0..m.rows() {
        for (j, &v) in m.row(i).iter().enumerate() {
            if v != 0.0 {
                out.push_str(&format!("{i} {j} {v}\n"));
            }
        }
    }
}

/// Serialize to the `.miqp` text format.
pub fn write_text(inst: &MiqpInstance) -> String {
    let mut out = String::new();
    out.push_str("# miqp instance\n");
    out.push_str("miqp 1\n");
    out.push_str(&format!("name {}\n", inst.name));
    if let Some(seed) = inst.seed {
        out.push_str(&format!("seed {seed}\n"));
    }
    if let Some(rng) = &inst.rng {
        out.push_str(&format!("rng {rng}\n"));
    }
    out.push_str(&format!("n {}\n", inst.n));
    out.push_str(&format!("m1 {}\n", inst.m1()));
    out.push_str(&format!("m2 {}\n", inst.m2()));
    if let Some(k) = inst.k {
        out.push_str(&format!("k {k}\n"));
    }
    out.push_str("Q\n");
    for i in 0..inst.n {
        let row: Vec<String> = inst.q.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    push_vector(&mut out, "g", &inst.g);
    push_vector(&mut out, "h", &inst.h);
    if inst.m1() > 0 {
        push_triplets(&mut out, "A", &inst.a);
        push_vector(&mut out, "b", &inst.b);
    }
    if inst.m2() > 0 {
        push_triplets(&mut out, "C", &inst.c);
        push_triplets(&mut out, "D", &inst.d);
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (idx, raw) in self.iter.by_ref() {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some((idx + 1, t));
        }
        None
    }
}

fn perr(line: usize, msg: impl Into<String>) -> InstanceError {
    InstanceError::Parse { line, msg: msg.into() }
}

fn parse_floats(line: usize, s: &str, want: usize, what: &str) -> Result<Vec<f64>, InstanceError> {
    let vals: Result<Vec<f64>, _> = s.split_whitespace().map(str::parse::<f64>).collect();
    let vals = vals.map_err(|e| perr(line, format!("bad float in {what}: {e}")))?;
    if vals.len() != want {
        return Err(perr(line, format!("{what}: expected {want} values, found {}", vals.len())));
    }
    Ok(vals)
}

fn need<'a>(lines: &mut Lines<'a>, what: &str) -> Result<(usize, &'a str), InstanceError> {
    lines
        .next_content()
        .ok_or_else(|| perr(0, format!("unexpected end of file, expected {what}")))
}

fn read_vector(lines: &mut Lines, label: &str, len: usize) -> Result<Vec<f64>, InstanceError> {
    let (ln, line) = need(lines, label)?;
    if line != label {
        return Err(perr(ln, format!("expected `{label}` section, found `{line}`")));
    }
    if len == 0 {
        return Ok(Vec::new());
    }
    let (ln, line) = need(lines, label)?;
    parse_floats(ln, line, len, label)
}

fn read_triplets(
    lines: &mut Lines,
    label: &str,
    rows: usize,
    n: usize,
) -> Result<DenseMatrix, InstanceError> {
    let (ln, line) = need(lines, label)?;
    let (key, count) = line
        .split_once(char::is_whitespace)
        .ok_or_else(|| perr(ln, format!("expected `{label} <nnz>`")))?;
    if key != label {
        return Err(perr(ln, format!("expected `{label}` section, found `{key}`")));
    }
    let nnz: usize = count.trim().parse().map_err(|e| perr(ln, format!("bad count: {e}")))?;
    let mut m = DenseMatrix::zeros(rows, n);
    for _ in 0..nnz {
        let (ln, line) = need(lines, "triplet")?;
        let mut it = line.split_whitespace();
        let i: usize = it
            .next()
            .ok_or_else(|| perr(ln, "missing row index"))?
            .parse()
            .map_err(|e| perr(ln, format!("bad row index: {e}")))?;
        let j: usize = it
            .next()
            .ok_or_else(|| perr(ln, "missing column index"))?
            .parse()
            .map_err(|e| perr(ln, format!("bad column index: {e}")))?;
        let v: f64 = it
            .next()
            .ok_or_else(|| perr(ln, "missing value"))?
            .parse()
            .map_err(|e| perr(ln, format!("bad value: {e}")))?;
        if i >= rows || j >= n {
            return Err(perr(ln, format!("triplet ({i},{j}) outside {rows} x {n}")));
        }
        m[(i, j)] = v;
    }
    Ok(m)
}

/// Parse the `.miqp` text format. Reports the offending line on failure
/// and validates the result (including `Q` symmetry, naming the offending
/// entry pair).
pub fn parse_text(text: &str) -> Result<MiqpInstance, InstanceError> {
    let lines = &mut Lines { iter: text.lines().enumerate() };

    let (ln, magic) = need(lines, "header")?;
    if magic != "miqp 1" {
        return Err(perr(ln, format!("expected `miqp 1` header, found `{magic}`")));
    }

    let mut name = String::new();
    let mut seed = None;
    let mut rng = None;
    let mut n = None;
    let mut m1 = None;
    let mut m2 = None;
    let mut k = None;

    // Scalar header fields until the Q section starts.
    let q_line;
    loop {
        let (ln, line) = need(lines, "header field or Q section")?;
        let (key, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        match key {
            "name" => name = rest.to_string(),
            "seed" => {
                seed = Some(rest.parse().map_err(|e| perr(ln, format!("bad seed: {e}")))?)
            }
            "rng" => rng = Some(rest.to_string()),
            "n" => n = Some(rest.parse().map_err(|e| perr(ln, format!("bad n: {e}")))?),
            "m1" => m1 = Some(rest.parse().map_err(|e| perr(ln, format!("bad m1: {e}")))?),
            "m2" => m2 = Some(rest.parse().map_err(|e| perr(ln, format!("bad m2: {e}")))?),
            "k" => k = Some(rest.parse().map_err(|e| perr(ln, format!("bad k: {e}")))?),
            "Q" => {
                q_line = ln;
                break;
            }
            other => return Err(perr(ln, format!("unknown header field `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| perr(q_line, "n must be declared before Q"))?;
    let m1: usize = m1.unwrap_or(0);
    let m2: usize = m2.unwrap_or(0);

    let mut q = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let (ln, line) = need(lines, "a row of Q")?;
        let vals = parse_floats(ln, line, n, "Q row")?;
        q.row_mut(i).copy_from_slice(&vals);
    }

    let g = read_vector(lines, "g", n)?;
    let h = read_vector(lines, "h", n)?;

    let (a, b) = if m1 > 0 {
        let a = read_triplets(lines, "A", m1, n)?;
        let b = read_vector(lines, "b", m1)?;
        (a, b)
    } else {
        (DenseMatrix::zeros(0, n), Vec::new())
    };
    let (c, d) = if m2 > 0 {
        (read_triplets(lines, "C", m2, n)?, read_triplets(lines, "D", m2, n)?)
    } else {
        (DenseMatrix::zeros(0, n), DenseMatrix::zeros(0, n))
    };

    let (ln, fin) = need(lines, "end")?;
    if fin != "end" {
        return Err(perr(ln, format!("expected `end`, found `{fin}`")));
    }

    let inst = MiqpInstance { name, n, q, g, h, a, b, c, d, k, seed, rng };
    inst.validate()?;
    Ok(inst)
}

pub fn write_file(inst: &MiqpInstance, path: &Path) -> Result<(), InstanceError> {
    Ok(std::fs::write(path, write_text(inst))?)
}

pub fn read_file(path: &Path) -> Result<MiqpInstance, InstanceError> {
    parse_text(&std::fs::read_to_string(path)?)
}

// --- portfolio generator ----------------------------------------------------

/// Parameters of the portfolio generator; see the module docs.
#[derive(Debug, Clone, Copy)]
pub struct PortfolioSpec {
    pub n: usize,
    pub k: Option<usize>,
    pub seed: u64,
}

const RNG_ID: &str = "chacha12";

/// Per-field stream identifiers; field order is append-only.
enum Stream {
    Mu = 0,
    Alpha = 1,
    UpperBound = 2,
    Rho = 3,
    QOffDiag = 4,
    QDiag = 5,
}

struct FieldRng(ChaCha12Rng);

impl FieldRng {
    fn new(seed: u64, stream: Stream) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        FieldRng(rng)
    }

    /// Uniform draw from `[lo, hi)` through the top 53 bits.
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let t = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * t
    }

    /// Uniform integer from `{lo, ..., hi}` inclusive. The modulo bias is
    /// below 1e-17 for the ranges used here.
    fn uniform_int(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.0.next_u64() % (hi - lo + 1)
    }
}

/// Greedy feasibility certificate: pick the highest-return assets, check
/// that the budget of 1 is splittable within their holding bounds, and
/// that the best achievable return clears `rho`.
fn portfolio_feasible(mu: &[f64], alpha: &[f64], u: &[f64], rho: f64, k: usize) -> bool {
    let n = mu.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| mu[j].partial_cmp(&mu[i]).unwrap().then(i.cmp(&j)));
    for size in 1..=k.min(n) {
        let t = &order[..size];
        let alpha_sum: f64 = t.iter().map(|&i| alpha[i]).sum();
        let u_sum: f64 = t.iter().map(|&i| u[i]).sum();
        if alpha_sum > 1.0 || u_sum < 1.0 {
            continue;
        }
        // Water-fill the slack onto the highest returns first.
        let mut budget = 1.0 - alpha_sum;
        let mut ret: f64 = t.iter().map(|&i| alpha[i] * mu[i]).sum();
        for &i in t {
            let take = budget.min(u[i] - alpha[i]);
            ret += take * mu[i];
            budget -= take;
            if budget <= 0.0 {
                break;
            }
        }
        if ret >= rho {
            return true;
        }
    }
    false
}

/// Generate a portfolio instance. Draws are deterministic in the seed;
/// seeds whose draw is infeasible are incremented until a feasible
/// instance appears (the working seed is recorded in the metadata).
pub fn generate_portfolio(spec: &PortfolioSpec) -> Result<MiqpInstance, InstanceError> {
    let n = spec.n;
    assert!(n >= 1, "n must be at least 1");
    if let Some(k) = spec.k {
        assert!(k <= n, "k must not exceed n");
    }
    const MAX_ATTEMPTS: usize = 200;
    for attempt in 0..MAX_ATTEMPTS {
        let seed = spec.seed.wrapping_add(attempt as u64);

        let mut mu_rng = FieldRng::new(seed, Stream::Mu);
        let mu: Vec<f64> = (0..n).map(|_| mu_rng.uniform(0.002, 0.01)).collect();
        let mut alpha_rng = FieldRng::new(seed, Stream::Alpha);
        let alpha: Vec<f64> = (0..n).map(|_| alpha_rng.uniform(0.075, 0.125)).collect();
        let mut u_rng = FieldRng::new(seed, Stream::UpperBound);
        let u: Vec<f64> = (0..n).map(|_| u_rng.uniform(0.375, 0.425)).collect();
        let rho = FieldRng::new(seed, Stream::Rho).uniform(0.002, 0.01);

        if !portfolio_feasible(&mu, &alpha, &u, rho, spec.k.unwrap_or(n)) {
            continue;
        }

        let mut q = DenseMatrix::zeros(n, n);
        let mut off = FieldRng::new(seed, Stream::QOffDiag);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = off.uniform_int(1, 10) as f64;
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
        let mut diag = FieldRng::new(seed, Stream::QDiag);
        for i in 0..n {
            q[(i, i)] = diag.uniform_int(10 * n as u64, 20 * n as u64) as f64;
        }

        // Budget as an equality pair, then the return floor.
        let mut a = DenseMatrix::zeros(3, n);
        for j in 0..n {
            a[(0, j)] = 1.0;
            a[(1, j)] = -1.0;
            a[(2, j)] = -mu[j];
        }
        let b = vec![1.0, -1.0, -rho];

        // Semicontinuous holdings: y_i <= u_i x_i and alpha_i x_i <= y_i.
        let mut c = DenseMatrix::zeros(2 * n, n);
        let mut d = DenseMatrix::zeros(2 * n, n);
        for i in 0..n {
            c[(2 * i, i)] = 1.0;
            d[(2 * i, i)] = u[i];
            c[(2 * i + 1, i)] = -1.0;
            d[(2 * i + 1, i)] = -alpha[i];
        }

        let k_label = spec.k.map_or("all".to_string(), |k| k.to_string());
        let inst = MiqpInstance {
            name: format!("pard-n{n}-k{k_label}-s{seed}"),
            n,
            q,
            g: vec![0.0; n],
            h: vec![0.0; n],
            a,
            b,
            c,
            d,
            k: spec.k,
            seed: Some(seed),
            rng: Some(RNG_ID.to_string()),
        };
        debug_assert!(inst.validate().is_ok());
        return Ok(inst);
    }
    Err(InstanceError::GenerationFailed { attempts: MAX_ATTEMPTS })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MiqpInstance {
        generate_portfolio(&PortfolioSpec { n: 6, k: Some(3), seed: 7 }).unwrap()
    }

    #[test]
    fn generator_is_deterministic() {
        let a = small();
        let b = small();
        assert_eq!(a, b);
        assert_eq!(a.rng.as_deref(), Some("chacha12"));
    }

    #[test]
    fn generator_shapes_and_ranges() {
        let inst = small();
        assert_eq!(inst.m1(), 3);
        assert_eq!(inst.m2(), 12);
        assert_eq!(inst.k, Some(3));
        inst.validate().unwrap();
        for i in 0..inst.n {
            let diag = inst.q[(i, i)];
            assert!((60.0..=120.0).contains(&diag), "diag {diag}");
            assert_eq!(diag, diag.round());
            for j in 0..inst.n {
                if i != j {
                    let v = inst.q[(i, j)];
                    assert!((1.0..=10.0).contains(&v));
                    assert_eq!(v, v.round());
                }
            }
            // u_i in row 2i of D, -alpha_i in row 2i+1.
            let u = inst.d[(2 * i, i)];
            assert!((0.375..0.425).contains(&u));
            let alpha = -inst.d[(2 * i + 1, i)];
            assert!((0.075..0.125).contains(&alpha));
        }
        assert_eq!(inst.b[0], 1.0);
        assert_eq!(inst.b[1], -1.0);
        let rho = -inst.b[2];
        assert!((0.002..0.01).contains(&rho));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let inst = small();
        let text = write_text(&inst);
        let back = parse_text(&text).unwrap();
        assert_eq!(inst, back);
        for (x, y) in inst.q.data().iter().zip(back.q.data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in inst.d.data().iter().zip(back.d.data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        // A second trip through text must be byte-identical.
        assert_eq!(text, write_text(&back));
    }

    #[test]
    fn missing_k_round_trips_as_none() {
        let mut inst = small();
        inst.k = None;
        inst.name = "nok".into();
        let back = parse_text(&write_text(&inst)).unwrap();
        assert_eq!(back.k, None);
    }

    #[test]
    fn parse_rejects_asymmetric_q() {
        let text = "\
miqp 1
name bad
n 2
m1 0
m2 0
Q
1 2
3 1
g
0 0
h
0 0
end
";
        match parse_text(text) {
            Err(InstanceError::NotSymmetric { i: 0, j: 1 }) => {}
            other => panic!("expected NotSymmetric(0,1), got {other:?}"),
        }
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "miqp 1\nname x\nn 1\nm1 0\nm2 0\nQ\nnot-a-number\n";
        match parse_text(text) {
            Err(InstanceError::Parse { line: 7, .. }) => {}
            other => panic!("expected Parse at line 7, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let inst = small();
        let mut text = String::from("# leading comment\n\n");
        text.push_str(&write_text(&inst));
        let back = parse_text(&text).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn infeasible_budget_reseeds() {
        // k = 2 cannot reach a budget of 1 with u <= 0.425; generation must
        // fail rather than return an infeasible instance.
        let r = generate_portfolio(&PortfolioSpec { n: 8, k: Some(2), seed: 1 });
        assert!(matches!(r, Err(InstanceError::GenerationFailed { .. })));
    }

    #[test]
    fn streams_are_stable_across_n() {
        // Same seed, different n: the shared prefix of mu must agree
        // because each field draws from its own stream.
        let a = generate_portfolio(&PortfolioSpec { n: 6, k: Some(3), seed: 11 }).unwrap();
        let b = generate_portfolio(&PortfolioSpec { n: 8, k: Some(3), seed: 11 }).unwrap();
        if a.seed == b.seed {
            for i in 0..6 {
                assert_eq!(a.a[(2, i)].to_bits(), b.a[(2, i)].to_bits());
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn generated_instances_round_trip(nk in (4usize..10, 3usize..5), seed in 0u64..500) {
                let (n, k) = nk;
                let k = k.min(n);
                if let Ok(inst) = generate_portfolio(&PortfolioSpec { n, k: Some(k), seed }) {
                    prop_assert!(inst.validate().is_ok());
                    let back = parse_text(&write_text(&inst)).unwrap();
                    prop_assert_eq!(inst, back);
                }
            }
        }
    }
}
