use nalgebra::{DMatrix, DVector};

use super::{
    spectral_decomposition, EntropyPair, Multiplicity, SmoothMap, SpectralData, SystemDef,
    SystemParts,
};
use crate::error::{Error, Result};
use crate::State;

pub const GALLERY: [&str; 5] =
    ["linear2", "linear3_mult2", "triangular_ld", "chaplygin", "chaplygin_tracers2"];

pub fn gallery_names() -> &'static [&'static str] {
    &GALLERY
}

pub fn gallery(name: &str) -> Result<SystemDef> {
    match name {
        "linear2" => linear2(),
        "linear3_mult2" => linear3_mult2(),
        "triangular_ld" => triangular_ld(),
        "chaplygin" => chaplygin_at(&DVector::from_vec(vec![1.0, 0.0]), 0.2),
        "chaplygin_tracers2" => chaplygin_tracers2(),
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}

/// `η = |L(u−c)|²/2`, `q = Σ λᵢ (lᵢ(u−c))²/2` for `uₜ + A uₓ = 0`.
pub fn quadratic_entropy(sd: &SpectralData, center: &State) -> EntropyPair {
    let l1 = sd.left.clone();
    let l2 = sd.left.clone();
    let (c1, c2) = (center.clone(), center.clone());
    let lam = sd.lambdas.clone();
    EntropyPair::new(
        move |u| 0.5 * (&l1 * (u - &c1)).norm_squared(),
        move |u| {
            let w = &l2 * (u - &c2);
            0.5 * w.iter().zip(&lam).map(|(w, l)| l * w * w).sum::<f64>()
        },
    )
}

/// `uₜ + A uₓ = 0` with boundary forms `b₁ = rows1·u`, `b₂ = rows2·u` built from the
/// left eigenvectors of `A` at the origin.
pub fn linear_system(
    name: &str,
    a: DMatrix<f64>,
    m: usize,
    mult: Multiplicity,
    r_ball: f64,
    boundary: impl FnOnce(&SpectralData) -> (DMatrix<f64>, DMatrix<f64>),
) -> Result<SystemDef> {
    let n = a.nrows();
    let sd = spectral_decomposition(&a, mult, None)?;
    let (b1, b2) = boundary(&sd);
    let center = DVector::zeros(n);
    SystemDef::from_parts(SystemParts {
        name: name.to_string(),
        n,
        m,
        mult,
        entropy: Some(quadratic_entropy(&sd, &center)),
        h: SmoothMap::identity(n),
        g: SmoothMap::linear(a),
        center,
        r_ball,
        b1: SmoothMap::linear(b1),
        b2: SmoothMap::linear(b2),
        anchors: Some((0..n).map(|i| sd.r(i)).collect()),
    })
}

fn rows(sd: &SpectralData, combos: &[&[(usize, f64)]]) -> DMatrix<f64> {
    let n = sd.lambdas.len();
    let mut out = DMatrix::zeros(combos.len(), n);
    for (r, combo) in combos.iter().enumerate() {
        for &(i, w) in combo.iter() {
            let row = out.row(r) + sd.l(i) * w;
            out.set_row(r, &row);
        }
    }
    out
}

fn linear2() -> Result<SystemDef> {
    let a = DMatrix::from_row_slice(2, 2, &[0.5, 1.5, 1.5, 0.5]);
    linear_system("linear2", a, 1, Multiplicity::SIMPLE, 0.5, |sd| {
        (rows(sd, &[&[(1, 1.0), (0, 0.5)]]), rows(sd, &[&[(0, 1.0), (1, 0.5)]]))
    })
}

fn linear3_mult2() -> Result<SystemDef> {
    let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
    linear_system("linear3_mult2", a, 2, Multiplicity { k: 0, p: 2 }, 0.5, |sd| {
        (
            rows(sd, &[&[(2, 1.0), (0, 0.5)]]),
            rows(sd, &[&[(0, 1.0), (2, 1.0)], &[(1, 1.0)]]),
        )
    })
}

fn triangular_ld() -> Result<SystemDef> {
    let g = SmoothMap::new(2, |u| DVector::from_vec(vec![-u[0] + u[1].sin(), 2.0 * u[1]]))
        .with_jacobian(|u| DMatrix::from_row_slice(2, 2, &[-1.0, u[1].cos(), 0.0, 2.0]));
    let b1 = SmoothMap::linear(DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
    let b2 = SmoothMap::linear(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
    let z = |u: &State| u[0] - u[1].sin() / 3.0;
    SystemDef::from_parts(SystemParts {
        name: "triangular_ld".into(),
        n: 2,
        m: 1,
        mult: Multiplicity::SIMPLE,
        h: SmoothMap::identity(2),
        g,
        center: DVector::zeros(2),
        r_ball: 0.5,
        b1,
        b2,
        entropy: Some(EntropyPair::new(
            move |u| 0.5 * z(u).powi(2) + 0.5 * u[1] * u[1],
            move |u| -0.5 * z(u).powi(2) + u[1] * u[1],
        )),
        anchors: None,
    })
}

const CHAPLYGIN_A: f64 = 1.0;

/// Chaplygin gas in `(ρ, m = ρu)` with `p(ρ) = −A/ρ`, `A = 1`, on the ball of
/// radius `r` around `center`. Boundary maps `b₁ = b₂ = m`.
pub fn chaplygin_at(center: &State, r: f64) -> Result<SystemDef> {
    let a = CHAPLYGIN_A;
    let g = SmoothMap::new(2, move |u| {
        let (rho, m) = (u[0], u[1]);
        DVector::from_vec(vec![m, m * m / rho - a / rho])
    })
    .with_jacobian(move |u| {
        let (rho, m) = (u[0], u[1]);
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, (a - m * m) / (rho * rho), 2.0 * m / rho])
    });
    let bm = SmoothMap::linear(DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
    SystemDef::from_parts(SystemParts {
        name: "chaplygin".into(),
        n: 2,
        m: 1,
        mult: Multiplicity::SIMPLE,
        h: SmoothMap::identity(2),
        g,
        center: center.clone(),
        r_ball: r,
        b1: bm.clone(),
        b2: bm,
        entropy: Some(EntropyPair::new(
            move |u| (u[1] * u[1] + a) / (2.0 * u[0]),
            move |u| u[1] / u[0] * (u[1] * u[1] - a) / (2.0 * u[0]),
        )),
        anchors: None,
    })
}

fn chaplygin_tracers2() -> Result<SystemDef> {
    let a = CHAPLYGIN_A;
    let g = SmoothMap::new(4, move |u| {
        let (rho, m, s1, s2) = (u[0], u[1], u[2], u[3]);
        DVector::from_vec(vec![m, m * m / rho - a / rho, m * s1 / rho, m * s2 / rho])
    })
    .with_jacobian(move |u| {
        let (rho, m, s1, s2) = (u[0], u[1], u[2], u[3]);
        let r2 = rho * rho;
        #[rustfmt::skip]
        let j = DMatrix::from_row_slice(4, 4, &[
            0.0, 1.0, 0.0, 0.0,
            (a - m * m) / r2, 2.0 * m / rho, 0.0, 0.0,
            -m * s1 / r2, s1 / rho, m / rho, 0.0,
            -m * s2 / r2, s2 / rho, 0.0, m / rho,
        ]);
        j
    });
    #[rustfmt::skip]
    let b1 = SmoothMap::linear(DMatrix::from_row_slice(3, 4, &[
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
    ]));
    let b2 = SmoothMap::linear(DMatrix::from_row_slice(1, 4, &[0.0, 1.0, 0.0, 0.0]));
    let eta = move |u: &State| (u[1] * u[1] + a + u[2] * u[2] + u[3] * u[3]) / (2.0 * u[0]);
    SystemDef::from_parts(SystemParts {
        name: "chaplygin_tracers2".into(),
        n: 4,
        m: 1,
        mult: Multiplicity { k: 1, p: 2 },
        h: SmoothMap::identity(4),
        g,
        center: DVector::from_vec(vec![1.0, 0.3, 0.0, 0.0]),
        r_ball: 0.1,
        b1,
        b2,
        entropy: Some(EntropyPair::new(eta, move |u| {
            let v = u[1] / u[0];
            v * (eta(u) - a / u[0])
        })),
        anchors: None,
    })
}
