//! Two-cluster weak-strong Hamiltonian family.
//!
//! Energies are intensive (per total spin). Cluster 1 is the strong cluster,
//! cluster 2 the weak one. Both clusters hold N/2 spins.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::vec3::Vec3;

/// Number of clusters. Fixed.
pub const CLUSTERS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coupling {
    DenseIntercluster,
    SparseIntercluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterFields {
    pub h1: f64,
    pub h2: f64,
}

impl Default for ClusterFields {
    fn default() -> Self {
        ClusterFields { h1: 1.0, h2: -0.49 }
    }
}

impl ClusterFields {
    pub fn is_weak_strong(&self) -> bool {
        self.h1 > 0.0 && self.h2 < 0.0
    }
}

/// XX catalyst strengths. Positive values are stoquastic.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CatalystConfig {
    pub xi11: f64,
    pub xi22: f64,
    pub xi12: f64,
}

impl CatalystConfig {
    pub fn new(xi11: f64, xi22: f64, xi12: f64) -> Self {
        CatalystConfig { xi11, xi22, xi12 }
    }

    pub fn is_stoquastic(&self) -> bool {
        self.xi11 >= 0.0 && self.xi22 >= 0.0 && self.xi12 >= 0.0
    }
}

/// Where a single catalyst strength `xi` is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Intercluster,
    StrongIntra,
    WeakIntra,
    Total,
}

impl Placement {
    pub fn catalyst(self, xi: f64) -> CatalystConfig {
        match self {
            Placement::Intercluster => CatalystConfig::new(0.0, 0.0, xi),
            Placement::StrongIntra => CatalystConfig::new(xi, 0.0, 0.0),
            Placement::WeakIntra => CatalystConfig::new(0.0, xi, 0.0),
            Placement::Total => CatalystConfig::new(xi / 2.0, xi / 2.0, xi),
        }
    }
}

/// Transverse-field schedule of one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    /// gamma(s) = s.
    Identity,
    /// gamma(s) = g for all s.
    FixedValue(f64),
}

impl Schedule {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Schedule::Identity => s,
            Schedule::FixedValue(g) => g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub gamma1: Schedule,
    pub gamma2: Schedule,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule { gamma1: Schedule::Identity, gamma2: Schedule::Identity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub coupling: Coupling,
    pub fields: ClusterFields,
    pub catalyst: CatalystConfig,
    pub schedule: AnnealSchedule,
}

impl ModelSpec {
    pub fn dense(catalyst: CatalystConfig) -> Self {
        ModelSpec {
            coupling: Coupling::DenseIntercluster,
            fields: ClusterFields::default(),
            catalyst,
            schedule: AnnealSchedule::default(),
        }
    }

    pub fn sparse(catalyst: CatalystConfig) -> Self {
        ModelSpec { coupling: Coupling::SparseIntercluster, ..ModelSpec::dense(catalyst) }
    }

    pub fn with_schedule(mut self, gamma1: Schedule, gamma2: Schedule) -> Self {
        self.schedule = AnnealSchedule { gamma1, gamma2 };
        self
    }

    pub fn with_fields(mut self, h1: f64, h2: f64) -> Self {
        self.fields = ClusterFields { h1, h2 };
        self
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.fields;
        let c = &self.catalyst;
        for (name, v) in [
            ("h1", f.h1),
            ("h2", f.h2),
            ("xi11", c.xi11),
            ("xi22", c.xi22),
            ("xi12", c.xi12),
        ] {
            ensure_finite(name, v)?;
        }
        for (name, g) in [("gamma1", self.schedule.gamma1), ("gamma2", self.schedule.gamma2)] {
            if let Schedule::FixedValue(v) = g {
                ensure_finite(name, v)?;
            }
        }
        if !f.is_weak_strong() {
            log::warn!("fields h1 = {}, h2 = {} are outside the weak-strong regime", f.h1, f.h2);
        }
        Ok(())
    }

    /// Whether cluster `a` (0 or 1) carries no term at all at this `s`,
    /// so that its magnetization is undetermined.
    pub fn cluster_is_free(&self, s: f64, a: usize) -> bool {
        let g = if a == 0 { self.schedule.gamma1 } else { self.schedule.gamma2 };
        s == 0.0 && g.eval(s) == 1.0
    }

    fn coeffs(&self, s: f64) -> Coeffs {
        let g1 = self.schedule.gamma1.eval(s);
        let g2 = self.schedule.gamma2.eval(s);
        Coeffs {
            s,
            t1: (1.0 - g1) / 2.0,
            t2: (1.0 - g2) / 2.0,
            c: s * (1.0 - s) / 4.0,
        }
    }
}

/// Pair of cluster magnetizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagPair {
    pub m1: Vec3,
    pub m2: Vec3,
}

impl MagPair {
    pub fn new(m1: Vec3, m2: Vec3) -> Self {
        MagPair { m1, m2 }
    }

    pub fn get(&self, a: usize) -> Vec3 {
        if a == 0 {
            self.m1
        } else {
            self.m2
        }
    }

    pub fn set(&mut self, a: usize, v: Vec3) {
        if a == 0 {
            self.m1 = v
        } else {
            self.m2 = v
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        let (a, b) = (self.m1, self.m2);
        [a[0], a[1], a[2], b[0], b[1], b[2]]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        MagPair { m1: [v[0], v[1], v[2]], m2: [v[3], v[4], v[5]] }
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.as_array().iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("magnetization has non-finite components".into()))
        }
    }
}

/// Intercluster pair coupling of the sparse model; `k12[i][j]` couples
/// component i of cluster 1 to component j of cluster 2.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub k12: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Copy)]
struct Coeffs {
    s: f64,
    t1: f64,
    t2: f64,
    c: f64,
}

fn check_args(spec: &ModelSpec, s: f64, m: &MagPair) -> Result<Coeffs> {
    ensure_finite("s", s)?;
    spec.validate()?;
    m.check_finite()?;
    Ok(spec.coeffs(s))
}

/// Terms shared by the dense and sparse models.
fn mean_field_common(spec: &ModelSpec, k: &Coeffs, m: &MagPair) -> f64 {
    let (f, x) = (&spec.fields, &spec.catalyst);
    let (a, b) = (m.m1, m.m2);
    -(k.s / 2.0) * (f.h1 * a[2] + f.h2 * b[2])
        - (k.s / 4.0) * (a[2] * a[2] + b[2] * b[2])
        - k.t1 * a[0]
        - k.t2 * b[0]
        - k.c * (x.xi11 * a[0] * a[0] + x.xi22 * b[0] * b[0])
}

/// Energy density h(s; m1, m2) of the dense model.
pub fn dense_energy_density(spec: &ModelSpec, s: f64, m: &MagPair) -> Result<f64> {
    let k = check_args(spec, s, m)?;
    let (a, b) = (m.m1, m.m2);
    Ok(mean_field_common(spec, &k, m)
        - (k.s / 4.0) * a[2] * b[2]
        - k.c * spec.catalyst.xi12 * a[0] * b[0])
}

/// Gradient of the dense energy density with respect to (m1, m2).
pub fn dense_gradient(spec: &ModelSpec, s: f64, m: &MagPair) -> Result<(Vec3, Vec3)> {
    let k = check_args(spec, s, m)?;
    let (f, x) = (&spec.fields, &spec.catalyst);
    let (a, b) = (m.m1, m.m2);
    let g1 = [
        -k.t1 - k.c * (2.0 * x.xi11 * a[0] + x.xi12 * b[0]),
        0.0,
        -(k.s / 2.0) * f.h1 - (k.s / 4.0) * (2.0 * a[2] + b[2]),
    ];
    let g2 = [
        -k.t2 - k.c * (2.0 * x.xi22 * b[0] + x.xi12 * a[0]),
        0.0,
        -(k.s / 2.0) * f.h2 - (k.s / 4.0) * (2.0 * b[2] + a[2]),
    ];
    Ok((g1, g2))
}

/// Hessian of the dense energy density, indexed by (3a + i, 3b + j).
/// Independent of `m` since h is quadratic.
pub fn dense_hessian(spec: &ModelSpec, s: f64, m: &MagPair) -> Result<[[f64; 6]; 6]> {
    let k = check_args(spec, s, m)?;
    let x = &spec.catalyst;
    let mut h = [[0.0; 6]; 6];
    h[0][0] = -2.0 * k.c * x.xi11;
    h[3][3] = -2.0 * k.c * x.xi22;
    h[0][3] = -k.c * x.xi12;
    h[3][0] = h[0][3];
    h[2][2] = -k.s / 2.0;
    h[5][5] = -k.s / 2.0;
    h[2][5] = -k.s / 4.0;
    h[5][2] = h[2][5];
    Ok(h)
}

fn require_sparse(spec: &ModelSpec) -> Result<()> {
    match spec.coupling {
        Coupling::SparseIntercluster => Ok(()),
        Coupling::DenseIntercluster => Err(Error::InvalidArgument(
            "operation requires a sparse-intercluster model".into(),
        )),
    }
}

/// Mean-field part h_m of the sparse model (pair terms excluded).
pub fn sparse_mean_field_density(spec: &ModelSpec, s: f64, m: &MagPair) -> Result<f64> {
    require_sparse(spec)?;
    let k = check_args(spec, s, m)?;
    Ok(mean_field_common(spec, &k, m))
}

pub fn sparse_mean_field_gradient(spec: &ModelSpec, s: f64, m: &MagPair) -> Result<(Vec3, Vec3)> {
    require_sparse(spec)?;
    let k = check_args(spec, s, m)?;
    let (f, x) = (&spec.fields, &spec.catalyst);
    let (a, b) = (m.m1, m.m2);
    let g1 = [-k.t1 - 2.0 * k.c * x.xi11 * a[0], 0.0, -(k.s / 2.0) * (f.h1 + a[2])];
    let g2 = [-k.t2 - 2.0 * k.c * x.xi22 * b[0], 0.0, -(k.s / 2.0) * (f.h2 + b[2])];
    Ok((g1, g2))
}

pub fn coupling_matrix(spec: &ModelSpec, s: f64) -> Result<CouplingMatrix> {
    require_sparse(spec)?;
    ensure_finite("s", s)?;
    spec.validate()?;
    let mut k12 = [[0.0; 3]; 3];
    k12[2][2] = s / 2.0;
    k12[0][0] = s * (1.0 - s) * spec.catalyst.xi12 / 2.0;
    Ok(CouplingMatrix { k12 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const X: Vec3 = [1.0, 0.0, 0.0];
    const UP: Vec3 = [0.0, 0.0, 1.0];
    const DOWN: Vec3 = [0.0, 0.0, -1.0];

    #[test]
    fn dense_energy_examples() {
        let spec = ModelSpec::dense(CatalystConfig::new(-3.0, 2.0, -7.0));
        let e = dense_energy_density(&spec, 0.0, &MagPair::new(X, X)).unwrap();
        assert_abs_diff_eq!(e, -1.0, epsilon = 1e-15);

        let spec = ModelSpec::dense(CatalystConfig::default());
        let a = dense_energy_density(&spec, 1.0, &MagPair::new(UP, UP)).unwrap();
        let b = dense_energy_density(&spec, 1.0, &MagPair::new(UP, DOWN)).unwrap();
        assert_abs_diff_eq!(a, -1.005, epsilon = 1e-15);
        assert_abs_diff_eq!(b, -0.995, epsilon = 1e-15);
    }

    #[test]
    fn dense_gradient_examples() {
        let spec = ModelSpec::dense(CatalystConfig::default());
        let (g1, _) = dense_gradient(&spec, 0.0, &MagPair::new(X, X)).unwrap();
        assert_eq!(g1, [-0.5, 0.0, 0.0]);
        let (g1, g2) = dense_gradient(&spec, 1.0, &MagPair::new(UP, UP)).unwrap();
        assert_abs_diff_eq!(g1[2], -1.25, epsilon = 1e-15);
        assert_abs_diff_eq!(g2[2], -0.505, epsilon = 1e-15);
        assert_eq!((g1[0], g2[0]), (0.0, 0.0));
    }

    #[test]
    fn dense_hessian_examples() {
        let spec = ModelSpec::dense(CatalystConfig::default());
        let m = MagPair::new(X, X);
        let h = dense_hessian(&spec, 1.0, &m).unwrap();
        assert_eq!(h[2][2], -0.5);
        assert_eq!(h[2][5], -0.25);
        for &(i, j) in &[(0, 0), (0, 3), (1, 1), (0, 1), (3, 4), (4, 4)] {
            assert_eq!(h[i][j], 0.0);
        }
        let xi = -4.0;
        let spec = ModelSpec::dense(CatalystConfig::new(0.0, 0.0, xi));
        let h = dense_hessian(&spec, 0.5, &m).unwrap();
        assert_abs_diff_eq!(h[0][3], -xi / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn sparse_examples() {
        let spec = ModelSpec::sparse(CatalystConfig::default());
        let e = sparse_mean_field_density(&spec, 0.0, &MagPair::new(X, X)).unwrap();
        assert_abs_diff_eq!(e, -1.0, epsilon = 1e-15);
        let e = sparse_mean_field_density(&spec, 1.0, &MagPair::new(UP, UP)).unwrap();
        assert_abs_diff_eq!(e, -0.755, epsilon = 1e-15);

        assert_eq!(coupling_matrix(&spec, 0.0).unwrap().k12, [[0.0; 3]; 3]);
        let k = coupling_matrix(&spec, 1.0).unwrap().k12;
        assert_eq!((k[2][2], k[0][0]), (0.5, 0.0));
        let spec = ModelSpec::sparse(CatalystConfig::new(0.0, 0.0, -4.0));
        let k = coupling_matrix(&spec, 0.5).unwrap().k12;
        assert_eq!((k[2][2], k[0][0]), (0.25, -0.5));
    }

    #[test]
    fn sparse_rejects_dense_spec() {
        let spec = ModelSpec::dense(CatalystConfig::default());
        let m = MagPair::new(X, X);
        assert!(matches!(
            sparse_mean_field_density(&spec, 0.3, &m),
            Err(Error::InvalidArgument(_))
        ));
        assert!(sparse_mean_field_gradient(&spec, 0.3, &m).is_err());
        assert!(coupling_matrix(&spec, 0.3).is_err());
    }

    #[test]
    fn non_finite_inputs_rejected() {
        let spec = ModelSpec::dense(CatalystConfig::default());
        let m = MagPair::new(X, X);
        assert!(dense_energy_density(&spec, f64::NAN, &m).is_err());
        let bad = MagPair::new([f64::INFINITY, 0.0, 0.0], X);
        assert!(dense_gradient(&spec, 0.5, &bad).is_err());
        let spec = ModelSpec::dense(CatalystConfig::new(f64::NAN, 0.0, 0.0));
        assert!(dense_hessian(&spec, 0.5, &m).is_err());
    }

    #[test]
    fn stoquastic_predicate() {
        assert!(CatalystConfig::new(0.0, 1.0, 2.0).is_stoquastic());
        assert!(!CatalystConfig::new(0.0, 0.0, -1e-9).is_stoquastic());
        assert!(!Placement::StrongIntra.catalyst(-1.0).is_stoquastic());
        assert_eq!(Placement::Total.catalyst(4.0), CatalystConfig::new(2.0, 2.0, 4.0));
    }

    #[test]
    fn schedules() {
        assert_eq!(Schedule::Identity.eval(0.0), 0.0);
        assert_eq!(Schedule::Identity.eval(1.0), 1.0);
        assert_eq!(Schedule::FixedValue(0.3).eval(0.9), 0.3);
        let spec = ModelSpec::dense(CatalystConfig::default())
            .with_schedule(Schedule::Identity, Schedule::FixedValue(1.0));
        assert!(spec.cluster_is_free(0.0, 1));
        assert!(!spec.cluster_is_free(0.0, 0));
        assert!(!spec.cluster_is_free(0.1, 1));
    }
}
