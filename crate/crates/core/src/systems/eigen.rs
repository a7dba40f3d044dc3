use nalgebra::{DMatrix, DVector, RowDVector};

use super::{family_groups, Multiplicity};
use crate::error::{Error, Result};
use crate::State;

/// Eigenvalues and biorthonormal eigenvectors of `(DH)⁻¹DG` at one state.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Ascending; the multiple block carries equal values.
    pub lambdas: Vec<f64>,
    /// Row `i` is `lᵢ`.
    pub left: DMatrix<f64>,
    /// Column `i` is `rᵢ`.
    pub right: DMatrix<f64>,
}

impl SpectralData {
    pub fn l(&self, i: usize) -> RowDVector<f64> {
        self.left.row(i).into_owned()
    }

    pub fn r(&self, i: usize) -> State {
        self.right.column(i).into_owned()
    }

    /// `max |lᵢ·rⱼ − δᵢⱼ|`.
    pub fn biorthogonality_error(&self) -> f64 {
        let n = self.lambdas.len();
        (&self.left * &self.right - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// `max |(A − λᵢ) rᵢ| / |rᵢ|`.
    pub fn residual(&self, a: &DMatrix<f64>) -> f64 {
        (0..self.lambdas.len())
            .map(|i| {
                let r = self.r(i);
                (a * &r - self.lambdas[i] * &r).norm() / r.norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Spectral decomposition of `a` with the multiplicity pattern `mult`.
///
/// Right eigenvectors have unit length. Simple ones are oriented by the sign of
/// their overlap with `anchors[i]`; inside the multiple block the frame is the
/// Gram–Schmidt orthonormalisation of the anchors projected onto the eigenspace.
/// Without anchors the first dominant component of a simple eigenvector is made
/// positive and the block frame comes from the projected unit vectors.
pub fn spectral_decomposition(
    a: &DMatrix<f64>,
    mult: Multiplicity,
    anchors: Option<&[State]>,
) -> Result<SpectralData> {
    let n = a.nrows();
    let ev = a.complex_eigenvalues();
    let scale = 1.0 + ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let imag = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > 1e-7 * scale {
        return Err(Error::ComplexSpectrum { imag });
    }
    let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);

    let groups = family_groups(n, mult);
    let mut means = Vec::with_capacity(groups.len());
    for g in &groups {
        let vals = &re[g.clone()];
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let spread = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        if spread > 1e-6 * scale {
            return Err(Error::Multiplicity(format!(
                "eigenvalues {vals:?} of the declared block are not equal"
            )));
        }
        means.push(mean);
    }
    for w in means.windows(2) {
        if w[1] - w[0] <= 1e-9 * scale {
            return Err(Error::Multiplicity(format!(
                "eigenvalues {} and {} coincide outside the declared block",
                w[0], w[1]
            )));
        }
    }

    let mut right = DMatrix::zeros(n, n);
    for (g, &mu) in groups.iter().zip(&means) {
        let p = g.len();
        let basis = null_space(a, mu, p, scale)?;
        let cols: Vec<State> = if p == 1 {
            let mut r = basis.column(0).into_owned();
            let flip = match anchors {
                Some(anc) => r.dot(&anc[g.start]) < 0.0,
                None => {
                    let mx = r.amax();
                    let first = r.iter().find(|x| x.abs() >= 0.5 * mx).copied().unwrap_or(1.0);
                    first < 0.0
                }
            };
            if flip {
                r = -r;
            }
            vec![r]
        } else {
            let targets: Vec<State> = match anchors {
                Some(anc) => anc[g.clone()].to_vec(),
                None => (0..n).map(|j| DVector::from_fn(n, |i, _| f64::from(i == j))).collect(),
            };
            block_frame(&basis, &targets)
        };
        for (j, c) in g.clone().zip(cols) {
            right.set_column(j, &c);
        }
    }
    let left = right
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Multiplicity("eigenvectors are not independent".into()))?;
    let mut lambdas = vec![0.0; n];
    for (g, &mu) in groups.iter().zip(&means) {
        for j in g.clone() {
            lambdas[j] = mu;
        }
    }
    Ok(SpectralData { lambdas, left, right })
}

/// Orthonormal basis (columns) of the `p` smallest right singular vectors of `a − μI`.
fn null_space(a: &DMatrix<f64>, mu: f64, p: usize, scale: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let shifted = a - DMatrix::<f64>::identity(n, n) * mu;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    if svd.singular_values[idx[p - 1]] > 1e-6 * scale {
        return Err(Error::Multiplicity(format!(
            "eigenvalue {mu} has fewer than {p} independent eigenvectors"
        )));
    }
    let mut basis = DMatrix::zeros(n, p);
    for (c, &i) in idx.iter().take(p).enumerate() {
        basis.set_column(c, &vt.row(i).transpose());
    }
    Ok(basis)
}

/// Gram–Schmidt of the projections of `targets` onto span(basis), keeping the first `p`.
fn block_frame(basis: &DMatrix<f64>, targets: &[State]) -> Vec<State> {
    let p = basis.ncols();
    let proj = basis * basis.transpose();
    let mut out: Vec<State> = Vec::with_capacity(p);
    for t in targets {
        if out.len() == p {
            break;
        }
        let mut v = &proj * t;
        for q in &out {
            v -= q * q.dot(&v);
        }
        let nv = v.norm();
        if nv > 1e-3 * t.norm().max(1e-300) {
            out.push(v / nv);
        }
    }
    // Degenerate targets: complete with the raw basis.
    for c in 0..p {
        if out.len() == p {
            break;
        }
        let mut v = basis.column(c).into_owned();
        for q in &out {
            v -= q * q.dot(&v);
        }
        let nv = v.norm();
        if nv > 1e-8 {
            out.push(v / nv);
        }
    }
    out
}
