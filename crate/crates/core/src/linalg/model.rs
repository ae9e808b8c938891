use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use super::{check_finite, C64};
use crate::{Error, Result};

/// Discrete-time LTI model `x+ = A x + B u`, `z = C x + D u`.
///
/// `n` may be zero (a pure feedthrough `D`). Inputs and outputs are at
/// least one-dimensional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelData", into = "ModelData")]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    dt: f64,
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>, dt: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}", n, a.ncols())));
        }
        let p = b.ncols();
        let q = c.nrows();
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, A has {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C has {} columns, A has {n}", c.ncols())));
        }
        if d.shape() != (q, p) {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {q}x{p}",
                d.nrows(),
                d.ncols()
            )));
        }
        if p == 0 || q == 0 {
            return Err(Error::Dimension("model needs at least one input and output".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        check_finite(&a, "A")?;
        check_finite(&b, "B")?;
        check_finite(&c, "C")?;
        check_finite(&d, "D")?;
        Ok(Self { a, b, c, d, dt })
    }

    /// Pure feedthrough with no states.
    pub fn static_gain(d: f64, dt: f64) -> Result<Self> {
        Self::new(
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, 1),
            DMatrix::zeros(1, 0),
            DMatrix::from_element(1, 1, d),
            dt,
        )
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }
    pub fn is_siso(&self) -> bool {
        self.n_inputs() == 1 && self.n_outputs() == 1
    }

    /// Transfer matrix `C (zeta I - A)^-1 B + D`.
    pub fn tf_eval(&self, zeta: C64) -> Result<DMatrix<C64>> {
        let n = self.n_states();
        let d = self.d.map(|v| Complex::new(v, 0.0));
        if n == 0 {
            return Ok(d);
        }
        let mut resolvent = self.a.map(|v| Complex::new(-v, 0.0));
        for i in 0..n {
            resolvent[(i, i)] += zeta;
        }
        let scale = resolvent.iter().map(|v| v.norm()).fold(0.0_f64, f64::max).max(1.0);
        let lu = resolvent.clone().lu();
        let near_pole = || Error::NearPole {
            zeta: format!("{}{:+}i", zeta.re, zeta.im),
        };
        // Cheap pivot screen, then an exact check on the smallest singular value.
        let u = lu.u();
        let min_pivot = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if min_pivot <= 1e-13 * scale {
            let sv = resolvent.singular_values();
            if sv.min() <= 1e-14 * sv.max().max(1.0) {
                return Err(near_pole());
            }
        }
        let bc = self.b.map(|v| Complex::new(v, 0.0));
        let x = lu.solve(&bc).ok_or_else(near_pole)?;
        let cc = self.c.map(|v| Complex::new(v, 0.0));
        Ok(cc * x + d)
    }

    /// Scalar transfer function value of a SISO model.
    pub fn tf_eval_siso(&self, zeta: C64) -> Result<C64> {
        if !self.is_siso() {
            return Err(Error::UnsupportedShape(format!(
                "expected SISO, got {}x{}",
                self.n_outputs(),
                self.n_inputs()
            )));
        }
        Ok(self.tf_eval(zeta)?[(0, 0)])
    }

    /// Frequency response at `e^{j omega}`.
    pub fn freq_response(&self, omega: f64) -> Result<DMatrix<C64>> {
        self.tf_eval(Complex::from_polar(1.0, omega))
    }

    pub fn poles(&self) -> Vec<C64> {
        super::poles_of(&self.a)
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.a)
    }

    /// All poles strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.spectral_radius() < 1.0
    }

    /// Model in coordinates `x' = T x`.
    pub fn similarity(&self, t: &DMatrix<f64>) -> Result<Self> {
        let tinv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular similarity transform".into()))?;
        Self::new(
            t * &self.a * &tinv,
            t * &self.b,
            &self.c * tinv,
            self.d.clone(),
            self.dt,
        )
    }

    /// Model with output multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            c: &self.c * k,
            d: &self.d * k,
            dt: self.dt,
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// One state update; returns `(x_next, output)`.
    pub fn step(
        &self,
        x: &nalgebra::DVector<f64>,
        u: &nalgebra::DVector<f64>,
    ) -> (nalgebra::DVector<f64>, nalgebra::DVector<f64>) {
        let y = &self.c * x + &self.d * u;
        let xn = &self.a * x + &self.b * u;
        (xn, y)
    }

    /// Markov parameters `D, CB, CAB, ...` (first `count` entries).
    pub fn markov_parameters(&self, count: usize) -> Vec<DMatrix<f64>> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.d.clone());
        let mut ak_b = self.b.clone();
        for _ in 1..count {
            out.push(&self.c * &ak_b);
            ak_b = &self.a * ak_b;
        }
        out
    }
}

/// Largest eigenvalue modulus; zero for an empty matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    super::poles_of(a).iter().map(|p| p.norm()).fold(0.0, f64::max)
}

/// Row-major matrix used by every JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixData {
    fn from(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<MatrixData> for DMatrix<f64> {
    type Error = Error;
    fn try_from(m: MatrixData) -> Result<Self> {
        if m.data.len() != m.rows * m.cols {
            return Err(Error::Dimension(format!(
                "matrix data has {} entries, expected {}x{}",
                m.data.len(),
                m.rows,
                m.cols
            )));
        }
        Ok(DMatrix::from_row_slice(m.rows, m.cols, &m.data))
    }
}

#[derive(Serialize, Deserialize)]
struct ModelData {
    a: MatrixData,
    b: MatrixData,
    c: MatrixData,
    d: MatrixData,
    dt: f64,
}

impl From<StateSpaceModel> for ModelData {
    fn from(m: StateSpaceModel) -> Self {
        Self {
            a: (&m.a).into(),
            b: (&m.b).into(),
            c: (&m.c).into(),
            d: (&m.d).into(),
            dt: m.dt,
        }
    }
}

impl TryFrom<ModelData> for StateSpaceModel {
    type Error = Error;
    fn try_from(m: ModelData) -> Result<Self> {
        StateSpaceModel::new(m.a.try_into()?, m.b.try_into()?, m.c.try_into()?, m.d.try_into()?, m.dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn scalar(a: f64, b: f64, c: f64, d: f64) -> StateSpaceModel {
        StateSpaceModel::new(dmatrix![a], dmatrix![b], dmatrix![c], dmatrix![d], 0.02).unwrap()
    }

    #[test]
    fn feedthrough_only() {
        let m = StateSpaceModel::static_gain(5.0, 0.02).unwrap();
        let g = m.tf_eval_siso(Complex::new(0.3, -2.0)).unwrap();
        assert_eq!(g, Complex::new(5.0, 0.0));
    }

    #[test]
    fn scalar_geometric_series() {
        let g = scalar(0.5, 1.0, 1.0, 0.0).tf_eval_siso(Complex::new(1.0, 0.0)).unwrap();
        assert!((g.re - 2.0).abs() < 1e-15 && g.im.abs() < 1e-15);
    }

    #[test]
    fn evaluation_at_a_pole_is_rejected() {
        let err = scalar(0.5, 1.0, 1.0, 0.0).tf_eval(Complex::new(0.5, 0.0));
        assert!(matches!(err, Err(Error::NearPole { .. })));
    }

    #[test]
    fn dimension_checks() {
        let bad = StateSpaceModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
            0.02,
        );
        assert!(matches!(bad, Err(Error::Dimension(_))));
        let nan = StateSpaceModel::new(dmatrix![f64::NAN], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0], 0.02);
        assert!(matches!(nan, Err(Error::NonFinite(_))));
    }

    #[test]
    fn json_roundtrip_is_row_major() {
        let m = StateSpaceModel::new(
            dmatrix![1.0, 2.0; 3.0, 4.0],
            dmatrix![1.0; 0.0],
            dmatrix![0.0, 1.0],
            dmatrix![0.0],
            0.02,
        )
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"data\":[1.0,2.0,3.0,4.0]"));
        let back: StateSpaceModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
