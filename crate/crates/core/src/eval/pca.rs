use std::fmt::Write as _;

use super::{EvalError, Result};

pub const PCA_ITERATIONS: usize = 200;
pub const PCA_TOLERANCE: f64 = 1e-9;

/// Rows projected onto the top two principal components.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub coords: Vec<[f64; 2]>,
    /// Covariance eigenvalues of the two components.
    pub explained: [f64; 2],
    /// Unit loadings; the first entry above 1e-12 in magnitude is positive.
    pub components: [Vec<f64>; 2],
    pub mean: Vec<f64>,
}

fn matvec(c: &[f64], d: usize, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = c[i * d..(i + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn orient(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Number of squarings applied to the covariance before iterating; each
/// iteration then multiplies by `C^(2^SQUARINGS)`.
const SQUARINGS: usize = 3;

/// `(c / ‖c‖_F)^(2^SQUARINGS)`. Same eigenvectors, but the gap between the
/// leading eigenvalues is raised to the same power, so each step does the
/// work of many plain ones.
fn sharpened(c: &[f64], d: usize) -> Vec<f64> {
    let fro = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut a: Vec<f64> = c.iter().map(|x| x / fro).collect();
    for _ in 0..SQUARINGS {
        let mut sq = vec![0.0; d * d];
        crate::tensor::kernels::gemm(d, d, d, &a, false, &a, false, &mut sq, false);
        let fro = sq.iter().map(|x| x * x).sum::<f64>().sqrt();
        if fro <= f64::MIN_POSITIVE {
            break;
        }
        sq.iter_mut().for_each(|x| *x /= fro);
        a = sq;
    }
    a
}

/// Dominant eigenpair of the symmetric PSD matrix `c` by power iteration,
/// started from the largest-norm column. The eigenvalue is the Rayleigh
/// quotient on `c` itself.
fn dominant(c: &[f64], d: usize) -> (f64, Vec<f64>) {
    let mut v = vec![0.0; d];
    let col_sq = |a: &[f64], j: usize| (0..d).map(|i| a[i * d + j] * a[i * d + j]).sum::<f64>();
    if (0..d).map(|j| col_sq(c, j)).fold(0.0, f64::max).sqrt() <= f64::MIN_POSITIVE {
        return (0.0, v);
    }
    let p = sharpened(c, d);
    let best = (0..d).map(|j| (j, col_sq(&p, j))).fold((0, -1.0), |b, x| if x.1 > b.1 { x } else { b });
    let col_norm = best.1.sqrt();
    if col_norm <= f64::MIN_POSITIVE {
        return (0.0, v);
    }
    for (i, x) in v.iter_mut().enumerate() {
        *x = p[i * d + best.0] / col_norm;
    }
    let mut next = vec![0.0; d];
    for _ in 0..PCA_ITERATIONS {
        matvec(&p, d, &v, &mut next);
        let n = norm(&next);
        if n <= f64::MIN_POSITIVE {
            return (0.0, vec![0.0; d]);
        }
        next.iter_mut().for_each(|x| *x /= n);
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        std::mem::swap(&mut v, &mut next);
        if delta < PCA_TOLERANCE {
            break;
        }
    }
    matvec(c, d, &v, &mut next);
    let lambda = v.iter().zip(&next).map(|(a, b)| a * b).sum::<f64>().max(0.0);
    (lambda, v)
}

/// Mean-centres `vectors` and projects them onto the top two eigenvectors
/// of their sample covariance (divisor `n − 1`), found by power iteration
/// with deflation. Zero-variance input projects to the origin.
pub fn pca2(vectors: &[Vec<f64>]) -> Result<Projection> {
    let n = vectors.len();
    if n < 2 {
        return Err(EvalError::TooFewSamples { needed: 2, got: n });
    }
    let d = vectors[0].len();
    if d == 0 {
        return Err(EvalError::Unsupported("vectors must have at least one entry".into()));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != d) {
        return Err(EvalError::WidthMismatch { expected: d, got: v.len() });
    }
    let mut mean = vec![0.0; d];
    for v in vectors {
        mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centred: Vec<Vec<f64>> = vectors.iter().map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let mut cov = vec![0.0; d * d];
    for v in &centred {
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += v[i] * v[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i * d + j] /= (n - 1) as f64;
            cov[j * d + i] = cov[i * d + j];
        }
    }

    let (l1, mut v1) = dominant(&cov, d);
    for i in 0..d {
        for j in 0..d {
            cov[i * d + j] -= l1 * v1[i] * v1[j];
        }
    }
    let (l2, mut v2) = if d > 1 { dominant(&cov, d) } else { (0.0, vec![0.0; d]) };
    orient(&mut v1);
    orient(&mut v2);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let coords = centred.iter().map(|v| [dot(v, &v1), dot(v, &v2)]).collect();
    Ok(Projection {
        coords,
        explained: [l1, l2],
        components: [v1, v2],
        mean,
    })
}

/// `row_id, pc1, pc2, group`.
pub fn projection_csv(proj: &Projection, groups: &[String]) -> String {
    let mut out = String::from("row_id,pc1,pc2,group\n");
    for (i, [a, b]) in proj.coords.iter().enumerate() {
        let g = groups.get(i).map_or("", String::as_str);
        writeln!(out, "{i},{a},{b},{g}").unwrap();
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Scatter plot on a fixed 800×600 canvas, one colour per group.
pub fn projection_svg(proj: &Projection, groups: &[String], title: &str) -> String {
    let (w, h, pad) = (800.0, 600.0, 50.0);
    let range = |k: usize| {
        let lo = proj.coords.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min);
        let hi = proj.coords.iter().map(|c| c[k]).fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > 1e-12 { (lo, hi - lo) } else { (lo - 0.5, 1.0) }
    };
    let ((x0, xs), (y0, ys)) = (range(0), range(1));
    let mut names: Vec<&str> = groups.iter().map(String::as_str).collect();
    names.sort_unstable();
    names.dedup();
    let colour = |g: &str| PALETTE[names.iter().position(|n| *n == g).unwrap_or(0) % PALETTE.len()];

    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 600" width="800" height="600">"#).unwrap();
    writeln!(out, r#"<rect width="800" height="600" fill="white"/>"#).unwrap();
    let title = title.replace('&', "&amp;").replace('<', "&lt;");
    writeln!(out, r#"<text x="400" y="28" text-anchor="middle" font-family="sans-serif" font-size="18">{title}</text>"#).unwrap();
    for (i, c) in proj.coords.iter().enumerate() {
        let px = pad + (c[0] - x0) / xs * (w - 2.0 * pad);
        let py = h - pad - (c[1] - y0) / ys * (h - 2.0 * pad);
        let g = groups.get(i).map_or("", String::as_str);
        writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{}" fill-opacity="0.7"/>"#, colour(g)).unwrap();
    }
    for (k, name) in names.iter().enumerate() {
        let y = 60 + 20 * k;
        let name = name.replace('&', "&amp;").replace('<', "&lt;");
        writeln!(out, r#"<circle cx="700" cy="{}" r="5" fill="{}"/>"#, y - 5, PALETTE[k % PALETTE.len()]).unwrap();
        writeln!(out, r#"<text x="712" y="{y}" font-family="sans-serif" font-size="14">{name}</text>"#).unwrap();
    }
    out.push_str("</svg>\n");
    out
}
