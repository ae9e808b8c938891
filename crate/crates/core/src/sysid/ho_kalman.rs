use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ArxModel;
use crate::linalg::{least_squares, spectral_radius, MatrixData, StateSpaceModel};
use crate::{Error, Result};

/// Singular-value ratio below which the Hankel matrix is treated as rank deficient.
pub const RANK_RATIO: f64 = 1e-10;

/// Realization `(A, B, C)` with observer gain `L`, identified in predictor form
/// `x(t+1) = (A - L C) x(t) + B u(t) + L z(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoKalmanResult {
    #[serde(with = "matrix_serde")]
    pub a_hat: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    pub b_hat: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    pub c_hat: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    pub l_hat: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub n: usize,
    pub rank_deficient: bool,
    /// Spectral radius of `A - L C`.
    pub observer_radius: f64,
}

mod matrix_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixData::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<f64>, D::Error> {
        let data = MatrixData::deserialize(d)?;
        data.try_into().map_err(serde::de::Error::custom)
    }
}

impl HoKalmanResult {
    /// `A - L C`.
    pub fn observer_a(&self) -> DMatrix<f64> {
        &self.a_hat - &self.l_hat * &self.c_hat
    }

    /// The `A - L C` assumption behind the truncation is violated.
    pub fn observer_unstable(&self) -> bool {
        self.observer_radius >= 1.0
    }

    /// Identified plant `u -> z` (strictly proper).
    pub fn model(&self, dt: f64) -> Result<StateSpaceModel> {
        StateSpaceModel::new(
            self.a_hat.clone(),
            self.b_hat.clone(),
            self.c_hat.clone(),
            DMatrix::zeros(1, 1),
            dt,
        )
    }
}

/// The `p x 2p` Hankel-type matrix factored by Ho-Kalman.
///
/// Zero-based block `(i, j)` (row `i`, columns `2j, 2j+1`) holds
/// `C Ã^(p-1-j+i) [B L] = [b_k, a_k]` with `k = p - j + i`, and zero for
/// `j < i` where `k > p` (the Markov parameters beyond the ARX order are
/// truncated). Row `i` is `C Ã^i` times the reversed controllability matrix
/// `[Ã^(p-1)[B L], ..., Ã[B L], [B L]]`, so its last two columns are `[B, L]`.
pub fn hankel_matrix(arx: &ArxModel) -> DMatrix<f64> {
    let p = arx.p;
    let mut h = DMatrix::zeros(p, 2 * p);
    for i in 0..p {
        for j in i..p {
            let k = p - j + i;
            h[(i, 2 * j)] = arx.b(k);
            h[(i, 2 * j + 1)] = arx.a(k);
        }
    }
    h
}

/// Ho-Kalman realization of order `n` from ARX coefficients.
pub fn ho_kalman(arx: &ArxModel, n: usize) -> Result<HoKalmanResult> {
    let p = arx.p;
    if n == 0 || n > p {
        return Err(Error::InvalidParameter(format!("model order {n} must be in 1..={p}")));
    }
    let h = hankel_matrix(arx);
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

    let mut obs = DMatrix::zeros(p, n);
    let mut ctrb = DMatrix::zeros(n, 2 * p);
    for (k, &i) in order.iter().take(n).enumerate() {
        let root = svd.singular_values[i].sqrt();
        obs.set_column(k, &(u.column(i) * root));
        ctrb.set_row(k, &(vt.row(i) * root));
    }
    let rank_deficient = sv[0] == 0.0 || sv[n - 1] < RANK_RATIO * sv[0];

    let c_hat = obs.rows(0, 1).into_owned();
    let b_hat = ctrb.columns(2 * p - 2, 1).into_owned();
    let l_hat = ctrb.columns(2 * p - 1, 1).into_owned();
    let a_obs = if p > 1 {
        least_squares(&obs.rows(0, p - 1).into_owned(), &obs.rows(1, p - 1).into_owned())?
    } else {
        DMatrix::zeros(n, n)
    };
    let observer_radius = spectral_radius(&a_obs);
    let a_hat = &a_obs + &l_hat * &c_hat;
    Ok(HoKalmanResult {
        a_hat,
        b_hat,
        c_hat,
        l_hat,
        singular_values: sv,
        n,
        rank_deficient,
        observer_radius,
    })
}

/// ARX coefficients generated by the observer `(Ã, [B L], C)`:
/// `a_k = C Ã^(k-1) L`, `b_k = C Ã^(k-1) B`.
pub fn observer_arx(
    a_obs: &DMatrix<f64>,
    b: &DMatrix<f64>,
    l: &DMatrix<f64>,
    c: &DMatrix<f64>,
    p: usize,
) -> Result<ArxModel> {
    let mut coeffs = Vec::with_capacity(2 * p);
    let mut ab = b.clone();
    let mut al = l.clone();
    for _ in 0..p {
        coeffs.push((c * &al)[(0, 0)]);
        coeffs.push((c * &ab)[(0, 0)]);
        ab = a_obs * ab;
        al = a_obs * al;
    }
    ArxModel::new(p, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use nalgebra::dmatrix;
    use rand::Rng;

    /// Observer-form transfer `(Ã, [B L], C)` at `e^{jw}`.
    fn observer_response(a: &DMatrix<f64>, b: &DMatrix<f64>, l: &DMatrix<f64>, c: &DMatrix<f64>, w: f64) -> (C64, C64) {
        let mut bl = DMatrix::zeros(a.nrows(), 2);
        bl.set_column(0, &b.column(0));
        bl.set_column(1, &l.column(0));
        let m = StateSpaceModel::new(a.clone(), bl, c.clone(), DMatrix::zeros(1, 2), 0.02).unwrap();
        let g = m.freq_response(w).unwrap();
        (g[(0, 0)], g[(0, 1)])
    }

    fn random_observer(seed: u64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let mut rng = crate::rng::substream(seed, "observer", 0);
        let mut rand = |r, c| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
        let mut a = rand(4, 4);
        let rho = spectral_radius(&a);
        a *= 0.2 / rho;
        (a, rand(4, 1), rand(4, 1), rand(1, 4))
    }

    #[test]
    fn exact_recovery_of_random_observer() {
        for seed in 0..5 {
            let (a, b, l, c) = random_observer(seed);
            let arx = observer_arx(&a, &b, &l, &c, 10).unwrap();
            let hk = ho_kalman(&arx, 4).unwrap();
            assert!(!hk.rank_deficient);
            let ao = hk.observer_a();
            for k in 0..512 {
                let w = std::f64::consts::PI * k as f64 / 511.0;
                let (gu, gz) = observer_response(&a, &b, &l, &c, w);
                let (hu, hz) = observer_response(&ao, &hk.b_hat, &hk.l_hat, &hk.c_hat, w);
                assert!((gu - hu).norm() < 1e-6 && (gz - hz).norm() < 1e-6, "seed {seed} w {w}");
            }
        }
    }

    #[test]
    fn scalar_system_order_one() {
        // Ã = 0.3, B = 2, L = -1, C = 1
        let arx = observer_arx(&dmatrix![0.3], &dmatrix![2.0], &dmatrix![-1.0], &dmatrix![1.0], 40).unwrap();
        let hk = ho_kalman(&arx, 1).unwrap();
        let ao = hk.observer_a()[(0, 0)];
        assert!((ao - 0.3).abs() < 1e-12);
        assert!(((&hk.c_hat * &hk.b_hat)[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(((&hk.c_hat * &hk.l_hat)[(0, 0)] + 1.0).abs() < 1e-12);
        assert!((hk.a_hat[(0, 0)] - (0.3 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_markov_parameters() {
        let arx = ArxModel::new(10, vec![0.0; 20]).unwrap();
        let hk = ho_kalman(&arx, 4).unwrap();
        assert!(hk.rank_deficient);
        for m in [&hk.a_hat, &hk.b_hat, &hk.c_hat, &hk.l_hat] {
            assert!(m.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn hankel_layout() {
        let arx = ArxModel::new(2, vec![11.0, 21.0, 12.0, 22.0]).unwrap();
        let h = hankel_matrix(&arx);
        assert_eq!(h, dmatrix![22.0, 12.0, 21.0, 11.0; 0.0, 0.0, 22.0, 12.0]);
    }

    #[test]
    fn invalid_order() {
        let arx = ArxModel::new(3, vec![0.1; 6]).unwrap();
        assert!(ho_kalman(&arx, 4).is_err());
        assert!(ho_kalman(&arx, 0).is_err());
    }

    #[test]
    fn result_json_roundtrip() {
        let (a, b, l, c) = random_observer(11);
        let hk = ho_kalman(&observer_arx(&a, &b, &l, &c, 10).unwrap(), 4).unwrap();
        let js = serde_json::to_string(&hk).unwrap();
        assert_eq!(serde_json::from_str::<HoKalmanResult>(&js).unwrap(), hk);
    }
}
