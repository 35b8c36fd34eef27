//! Thermomechanical material laws.
//!
//! The free energy is restricted to the additively split family
//! `psi(E, theta) = phi(E) + theta * cpl(tr E) + gamma(theta)`,
//! which separates mechanical and thermal parts of the internal energy and
//! keeps the heat unknown `u = U(theta) = gamma - theta gamma'` invertible in
//! temperature alone. Stress, entropy, heat capacity, creep rate, dissipation
//! and conductivity all derive from this ansatz, together with the exponent
//! admissibility region for the heat-capacity growth `alpha`, conductivity
//! growth `beta`, and entropy-test exponent `lambda`.

use crate::tensor::{DevTensor3, SymTensor3, ThirdOrderTensor, SYM_INDEX};
use crate::util::SplitMix64;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum MaterialError {
    NegativeTemperature(f64),
    NegativeThermalEnergy(f64),
    /// `lambda` must stay below `1 + alpha` for the generalized entropy to converge.
    LambdaOutOfRange { lambda: f64, limit: f64 },
    InvalidParameter(String),
}

impl fmt::Display for MaterialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaterialError::NegativeTemperature(t) => write!(f, "temperature {t} is negative"),
            MaterialError::NegativeThermalEnergy(u) => {
                write!(f, "thermal energy {u} is negative")
            }
            MaterialError::LambdaOutOfRange { lambda, limit } => {
                write!(f, "lambda = {lambda} must lie in [0, {limit}) for the generalized entropy")
            }
            MaterialError::InvalidParameter(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for MaterialError {}

fn check_theta(theta: f64) -> Result<(), MaterialError> {
    if theta < 0.0 || !theta.is_finite() {
        Err(MaterialError::NegativeTemperature(theta))
    } else {
        Ok(())
    }
}

/// Stored (mechanical) energy `phi` with first and second derivatives.
pub trait StoredEnergy: Send + Sync {
    fn value(&self, e: &SymTensor3) -> f64;
    /// phi'(E)
    fn stress(&self, e: &SymTensor3) -> SymTensor3;
    /// phi''(E) applied to a direction
    fn hessian_apply(&self, e: &SymTensor3, de: &SymTensor3) -> SymTensor3;
}

/// Scalar law with two derivatives; used for the volumetric coupling `cpl`
/// (acting on tr E) and the thermal energy `gamma` (acting on theta).
pub trait ScalarLaw: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn d(&self, x: f64) -> f64;
    fn dd(&self, x: f64) -> f64;
}

/// Isotropic quadratic stored energy `K/2 (tr E)^2 + G |dev E|^2`.
#[derive(Debug, Clone)]
pub struct QuadraticStored {
    pub bulk: f64,
    pub shear: f64,
}

impl StoredEnergy for QuadraticStored {
    fn value(&self, e: &SymTensor3) -> f64 {
        let tr = e.trace();
        0.5 * self.bulk * tr * tr + self.shear * e.dev().norm2()
    }

    fn stress(&self, e: &SymTensor3) -> SymTensor3 {
        let tr = e.trace();
        SymTensor3::spherical(self.bulk * tr) + e.dev().to_sym().scale(2.0 * self.shear)
    }

    fn hessian_apply(&self, _e: &SymTensor3, de: &SymTensor3) -> SymTensor3 {
        let tr = de.trace();
        SymTensor3::spherical(self.bulk * tr) + de.dev().to_sym().scale(2.0 * self.shear)
    }
}

/// Linear volumetric coupling `cpl(x) = slope * x`; the built-in thermal
/// expansion uses `slope = -alpha_v * K`.
#[derive(Debug, Clone)]
pub struct LinearCoupling {
    pub slope: f64,
}

impl ScalarLaw for LinearCoupling {
    fn value(&self, x: f64) -> f64 {
        self.slope * x
    }
    fn d(&self, _x: f64) -> f64 {
        self.slope
    }
    fn dd(&self, _x: f64) -> f64 {
        0.0
    }
}

/// Power-law thermal energy `gamma(theta) = -c_v theta^{1+alpha} / (alpha (1+alpha))`,
/// giving `U(theta) = c_v theta^{1+alpha} / (1+alpha)` and heat capacity
/// `c(theta) = c_v theta^alpha`.
#[derive(Debug, Clone, Copy)]
pub struct PowerLawThermal {
    pub c_v: f64,
    pub alpha: f64,
}

impl ScalarLaw for PowerLawThermal {
    fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -self.c_v / (self.alpha * (1.0 + self.alpha)) * x.powf(1.0 + self.alpha)
    }
    fn d(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -self.c_v / self.alpha * x.powf(self.alpha)
    }
    fn dd(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -self.c_v * x.powf(self.alpha - 1.0)
    }
}

/// Maxwell viscosity modulus `M(theta)`, constant by default with an optional
/// Arrhenius-type temperature dependence `M0 exp(theta_star / max(theta, floor))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellLaw {
    pub m0: f64,
    pub arrhenius: Option<ArrheniusParams>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrheniusParams {
    pub theta_star: f64,
    pub theta_floor: f64,
}

impl MaxwellLaw {
    pub fn constant(m0: f64) -> Self {
        MaxwellLaw { m0, arrhenius: None }
    }

    pub fn value(&self, theta: f64) -> f64 {
        match self.arrhenius {
            None => self.m0,
            Some(a) => self.m0 * (a.theta_star / theta.max(a.theta_floor)).exp(),
        }
    }

    pub fn d(&self, theta: f64) -> f64 {
        match self.arrhenius {
            None => 0.0,
            Some(a) => {
                if theta <= a.theta_floor {
                    0.0
                } else {
                    -self.value(theta) * a.theta_star / (theta * theta)
                }
            }
        }
    }
}

/// The free-energy ansatz plus everything derived from it.
#[derive(Clone)]
pub struct MaterialModel {
    pub stored: Arc<dyn StoredEnergy>,
    pub coupling: Arc<dyn ScalarLaw>,
    pub thermal: Arc<dyn ScalarLaw>,
    /// Heat-capacity growth exponent alpha (c(theta) ~ theta^alpha).
    pub heat_capacity_exponent: f64,
    /// Set when `thermal` is the built-in power law; enables closed forms for
    /// the inverse thermal energy and the generalized entropy.
    closed_form: Option<PowerLawThermal>,
}

impl MaterialModel {
    pub fn new(
        stored: Arc<dyn StoredEnergy>,
        coupling: Arc<dyn ScalarLaw>,
        thermal: Arc<dyn ScalarLaw>,
        heat_capacity_exponent: f64,
    ) -> Self {
        MaterialModel {
            stored,
            coupling,
            thermal,
            heat_capacity_exponent,
            closed_form: None,
        }
    }

    /// psi(E, theta) = phi(E) + theta cpl(tr E) + gamma(theta)
    pub fn free_energy(&self, e: &SymTensor3, theta: f64) -> Result<f64, MaterialError> {
        check_theta(theta)?;
        Ok(self.free_energy_unchecked(e, theta))
    }

    pub fn free_energy_unchecked(&self, e: &SymTensor3, theta: f64) -> f64 {
        self.stored.value(e) + theta * self.coupling.value(e.trace()) + self.thermal.value(theta)
    }

    /// Cauchy stress T(E, theta) = psi'_E + psi I.
    pub fn cauchy_stress(&self, e: &SymTensor3, theta: f64) -> Result<SymTensor3, MaterialError> {
        check_theta(theta)?;
        Ok(self.stress_unchecked(e, theta))
    }

    pub fn stress_unchecked(&self, e: &SymTensor3, theta: f64) -> SymTensor3 {
        let psi = self.free_energy_unchecked(e, theta);
        let sph = theta * self.coupling.d(e.trace()) + psi;
        self.stored.stress(e) + SymTensor3::spherical(sph)
    }

    /// Sensitivity of the stress to each stored strain component.
    pub fn stress_d_e(&self, e: &SymTensor3, theta: f64) -> [SymTensor3; 6] {
        let tr = e.trace();
        let phi_d = self.stored.stress(e);
        let cpl_d = self.coupling.d(tr);
        let cpl_dd = self.coupling.dd(tr);
        let mut out = [SymTensor3::ZERO; 6];
        for (m, slot) in out.iter_mut().enumerate() {
            let mut basis = SymTensor3::ZERO;
            basis.c[m] = 1.0;
            let tr_b = basis.trace();
            // d psi / d x_m enters the pressure term
            let dpsi = phi_d.dot(&basis) + theta * cpl_d * tr_b;
            let sph = theta * cpl_dd * tr_b + dpsi;
            *slot = self.stored.hessian_apply(e, &basis) + SymTensor3::spherical(sph);
        }
        out
    }

    /// d T / d theta is spherical; returns its scalar coefficient.
    pub fn stress_d_theta(&self, e: &SymTensor3, theta: f64) -> f64 {
        let tr = e.trace();
        self.coupling.d(tr) + self.coupling.value(tr) + self.thermal.d(theta)
    }

    /// Internal energy phi(E) + U(theta).
    pub fn internal_energy(&self, e: &SymTensor3, theta: f64) -> Result<f64, MaterialError> {
        check_theta(theta)?;
        Ok(self.stored.value(e) + self.thermal_energy_unchecked(theta))
    }

    /// Heat part of the internal energy, U(theta) = gamma - theta gamma'.
    pub fn thermal_energy(&self, theta: f64) -> Result<f64, MaterialError> {
        check_theta(theta)?;
        Ok(self.thermal_energy_unchecked(theta))
    }

    pub fn thermal_energy_unchecked(&self, theta: f64) -> f64 {
        if let Some(p) = self.closed_form {
            if theta <= 0.0 {
                return 0.0;
            }
            return p.c_v / (1.0 + p.alpha) * theta.powf(1.0 + p.alpha);
        }
        self.thermal.value(theta) - theta * self.thermal.d(theta)
    }

    /// Heat capacity c(theta) = U'(theta) = -theta gamma''(theta).
    pub fn heat_capacity(&self, theta: f64) -> Result<f64, MaterialError> {
        check_theta(theta)?;
        Ok(self.heat_capacity_unchecked(theta))
    }

    pub fn heat_capacity_unchecked(&self, theta: f64) -> f64 {
        if let Some(p) = self.closed_form {
            if theta <= 0.0 {
                return 0.0;
            }
            return p.c_v * theta.powf(p.alpha);
        }
        if theta == 0.0 {
            0.0
        } else {
            -theta * self.thermal.dd(theta)
        }
    }

    /// Inverts U(theta) = u; closed form for the built-in power law, otherwise
    /// a monotone bracketing root solve to relative 1e-12.
    pub fn thermal_energy_inverse(&self, u: f64) -> Result<f64, MaterialError> {
        if u < 0.0 || !u.is_finite() {
            return Err(MaterialError::NegativeThermalEnergy(u));
        }
        if let Some(p) = self.closed_form {
            return Ok(((1.0 + p.alpha) * u / p.c_v).powf(1.0 / (1.0 + p.alpha)));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        // bracket [0, hi]
        let mut hi = 1.0;
        while self.thermal_energy_unchecked(hi) < u {
            hi *= 2.0;
            if hi > 1e30 {
                return Err(MaterialError::InvalidParameter(
                    "thermal energy not invertible: U(theta) stays below target".into(),
                ));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.thermal_energy_unchecked(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi.max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Entropy eta = -psi'_theta = -cpl(tr E) - gamma'(theta).
    pub fn entropy(&self, e: &SymTensor3, theta: f64) -> Result<f64, MaterialError> {
        check_theta(theta)?;
        Ok(self.entropy_unchecked(e, theta))
    }

    pub fn entropy_unchecked(&self, e: &SymTensor3, theta: f64) -> f64 {
        -self.coupling.value(e.trace()) - self.thermal.d(theta)
    }

    /// Generalized entropy eta_lambda(theta) = integral_0^theta U'(s) / s^lambda ds.
    ///
    /// Diverges for lambda >= 1 + alpha; closed form
    /// `c_v theta^{1+alpha-lambda} / (1+alpha-lambda)` for the built-in law,
    /// adaptive Simpson quadrature (relative tolerance 1e-10) otherwise.
    pub fn generalized_entropy(&self, theta: f64, lambda: f64) -> Result<f64, MaterialError> {
        check_theta(theta)?;
        let limit = 1.0 + self.heat_capacity_exponent;
        if !(0.0..limit).contains(&lambda) {
            return Err(MaterialError::LambdaOutOfRange { lambda, limit });
        }
        if theta == 0.0 {
            return Ok(0.0);
        }
        if let Some(p) = self.closed_form {
            let q = 1.0 + p.alpha - lambda;
            return Ok(p.c_v * theta.powf(q) / q);
        }
        let f = |s: f64| self.heat_capacity_unchecked(s) / s.powf(lambda);
        // keep the quadrature away from the s = 0 endpoint
        let lo = 1e-12 * theta;
        Ok(adaptive_simpson(&f, lo, theta, 1e-10))
    }

    /// eta_lambda expressed through the heat energy u: the primitive of
    /// `1 / U^{-1}(u)^lambda` calibrated so that
    /// `generalized_entropy_of_u(U(theta)) = generalized_entropy(theta)`
    /// holds exactly.
    pub fn generalized_entropy_of_u(&self, u: f64, lambda: f64) -> Result<f64, MaterialError> {
        if let Some(p) = self.closed_form {
            let limit = 1.0 + p.alpha;
            if !(0.0..limit).contains(&lambda) {
                return Err(MaterialError::LambdaOutOfRange { lambda, limit });
            }
            if u < 0.0 {
                return Err(MaterialError::NegativeThermalEnergy(u));
            }
            let a1 = 1.0 + p.alpha;
            return Ok(p.c_v / (a1 - lambda) * (a1 * u / p.c_v).powf((a1 - lambda) / a1));
        }
        let theta = self.thermal_energy_inverse(u)?;
        self.generalized_entropy(theta, lambda)
    }

    /// Volumetric coupling power coefficient
    /// `A(E, theta) = theta cpl'(tr E) + theta cpl(tr E) + gamma(theta)`,
    /// equal to `tr(T(E,theta) - T(E,0)) / 3`.
    pub fn adiabatic_coeff(&self, e: &SymTensor3, theta: f64) -> f64 {
        let tr = e.trace();
        theta * self.coupling.d(tr) + theta * self.coupling.value(tr) + self.thermal.value(theta)
    }

    /// Adiabatic heating power A(E, theta) * div v.
    pub fn adiabatic_power(
        &self,
        e: &SymTensor3,
        theta: f64,
        div_v: f64,
    ) -> Result<f64, MaterialError> {
        check_theta(theta)?;
        let a = self.adiabatic_coeff(e, theta);
        #[cfg(debug_assertions)]
        {
            let alt = (self.stress_unchecked(e, theta) - self.stress_unchecked(e, 0.0)).trace() / 3.0;
            let scale = a.abs().max(alt.abs()).max(1e-30);
            debug_assert!(
                (a - alt).abs() <= 1e-10 * scale.max(1.0),
                "volumetric coupling coefficient mismatch: {a} vs {alt}"
            );
        }
        Ok(a * div_v)
    }

    /// d A / d theta.
    pub fn adiabatic_coeff_d_theta(&self, e: &SymTensor3, theta: f64) -> f64 {
        let tr = e.trace();
        self.coupling.d(tr) + self.coupling.value(tr) + self.thermal.d(theta)
    }

    /// d A / d (tr E).
    pub fn adiabatic_coeff_d_tre(&self, e: &SymTensor3, theta: f64) -> f64 {
        let tr = e.trace();
        theta * (self.coupling.dd(tr) + self.coupling.d(tr))
    }

    /// Random spot checks of the structural assumptions that cannot be proven
    /// for user-supplied laws: gamma(0) = 0, gamma'(0) = 0, convexity of phi
    /// along random segments, monotone U, and the growth bound |T| <= C (1 + energy).
    pub fn spot_check(&self, samples: usize) -> Vec<String> {
        let mut rng = SplitMix64::new(0x5eed);
        let mut warnings = Vec::new();
        if self.thermal.value(0.0).abs() > 1e-12 {
            warnings.push("gamma(0) != 0".to_string());
        }
        if self.thermal.d(0.0).abs() > 1e-12 {
            warnings.push("gamma'(0) != 0".to_string());
        }
        let mut convex_ok = true;
        let mut monotone_ok = true;
        let mut growth = 0.0_f64;
        for _ in 0..samples {
            let mut a = SymTensor3::ZERO;
            let mut b = SymTensor3::ZERO;
            for m in 0..6 {
                a.c[m] = rng.next_signed();
                b.c[m] = rng.next_signed();
            }
            let t = rng.next_f64();
            let mut mid = SymTensor3::ZERO;
            for m in 0..6 {
                mid.c[m] = t * a.c[m] + (1.0 - t) * b.c[m];
            }
            let lhs = self.stored.value(&mid);
            let rhs = t * self.stored.value(&a) + (1.0 - t) * self.stored.value(&b);
            if lhs > rhs + 1e-10 * (1.0 + rhs.abs()) {
                convex_ok = false;
            }
            let th1 = rng.next_range(1e-3, 5.0);
            let th2 = th1 + rng.next_range(1e-3, 1.0);
            if self.thermal_energy_unchecked(th2) <= self.thermal_energy_unchecked(th1) {
                monotone_ok = false;
            }
            let theta = rng.next_range(0.0, 5.0);
            let t_norm = self.stress_unchecked(&a, theta).norm();
            let energy = self.stored.value(&a) + self.thermal_energy_unchecked(theta);
            growth = growth.max(t_norm / (1.0 + energy));
        }
        if !convex_ok {
            warnings.push("stored energy failed a random convexity check".to_string());
        }
        if !monotone_ok {
            warnings.push("thermal energy U is not strictly increasing".to_string());
        }
        if growth > 1e3 {
            warnings.push(format!(
                "stress growth |T|/(1+energy) reached {growth:.1}; growth bound may fail"
            ));
        }
        warnings
    }
}

/// Built-in thermally expanding creep material: quadratic isotropic stored
/// energy, linear volumetric coupling, power-law heat capacity, and a
/// quadratic Maxwell creep potential.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoCreepMaterial {
    pub bulk_modulus: f64,
    pub shear_modulus: f64,
    /// thermal volume expansibility alpha_v (1/K)
    pub expansivity: f64,
    pub heat_capacity_coeff: f64,
    pub heat_capacity_exponent: f64,
    pub maxwell: MaxwellLaw,
}

impl ThermoCreepMaterial {
    pub fn validate(&self) -> Result<(), MaterialError> {
        let bad = |msg: &str| Err(MaterialError::InvalidParameter(msg.to_string()));
        if self.bulk_modulus <= 0.0 {
            return bad("bulk modulus must be positive");
        }
        if self.shear_modulus <= 0.0 {
            return bad("shear modulus must be positive");
        }
        if self.heat_capacity_coeff <= 0.0 {
            return bad("heat capacity coefficient must be positive");
        }
        if self.heat_capacity_exponent <= 0.0 {
            return bad("heat capacity exponent alpha must be positive");
        }
        if self.maxwell.m0 <= 0.0 {
            return bad("Maxwell modulus must be positive");
        }
        Ok(())
    }

    pub fn material(&self) -> MaterialModel {
        let thermal = PowerLawThermal {
            c_v: self.heat_capacity_coeff,
            alpha: self.heat_capacity_exponent,
        };
        MaterialModel {
            stored: Arc::new(QuadraticStored {
                bulk: self.bulk_modulus,
                shear: self.shear_modulus,
            }),
            coupling: Arc::new(LinearCoupling {
                slope: -self.expansivity * self.bulk_modulus,
            }),
            thermal: Arc::new(thermal),
            heat_capacity_exponent: self.heat_capacity_exponent,
            closed_form: Some(thermal),
        }
    }
}

/// Smooth strictly convex creep potential, exposed through its conjugate flow
/// map `Pi = [zeta_p(theta, .)*]'(dev T)` and the derivatives the implicit
/// solver needs.
pub trait CreepPotential: Send + Sync {
    fn flow(&self, dev_t: &DevTensor3, theta: f64) -> DevTensor3;
    fn flow_d_stress(&self, dev_t: &DevTensor3, theta: f64, dir: &DevTensor3) -> DevTensor3;
    fn flow_d_theta(&self, dev_t: &DevTensor3, theta: f64) -> DevTensor3;
    /// zeta_p'(theta, Pi): the creep stress at a given rate.
    fn stress_of_rate(&self, pi: &DevTensor3, theta: f64) -> DevTensor3;

    /// Dissipation rate zeta_p'(theta, Pi) : Pi expressed through the driving
    /// stress; equals dev T : flow(dev T) by conjugacy.
    fn dissipation_of_stress(&self, dev_t: &DevTensor3, theta: f64) -> f64 {
        dev_t.dot(&self.flow(dev_t, theta))
    }

    fn dissipation_d_stress(&self, dev_t: &DevTensor3, theta: f64, dir: &DevTensor3) -> f64 {
        dir.dot(&self.flow(dev_t, theta)) + dev_t.dot(&self.flow_d_stress(dev_t, theta, dir))
    }

    fn dissipation_d_theta(&self, dev_t: &DevTensor3, theta: f64) -> f64 {
        dev_t.dot(&self.flow_d_theta(dev_t, theta))
    }
}

/// Quadratic creep `zeta_p = M(theta)/2 |Pi|^2`, i.e. linear Maxwell flow
/// `Pi = dev T / M(theta)`.
#[derive(Debug, Clone)]
pub struct QuadraticCreep {
    pub maxwell: MaxwellLaw,
}

impl CreepPotential for QuadraticCreep {
    fn flow(&self, dev_t: &DevTensor3, theta: f64) -> DevTensor3 {
        dev_t.scale(1.0 / self.maxwell.value(theta))
    }

    fn flow_d_stress(&self, _dev_t: &DevTensor3, theta: f64, dir: &DevTensor3) -> DevTensor3 {
        dir.scale(1.0 / self.maxwell.value(theta))
    }

    fn flow_d_theta(&self, dev_t: &DevTensor3, theta: f64) -> DevTensor3 {
        let m = self.maxwell.value(theta);
        dev_t.scale(-self.maxwell.d(theta) / (m * m))
    }

    fn stress_of_rate(&self, pi: &DevTensor3, theta: f64) -> DevTensor3 {
        pi.scale(self.maxwell.value(theta))
    }
}

/// Dissipative laws: isotropic Stokes viscosity, second-grade hyper-viscosity,
/// and (optionally) Maxwellian creep in the deviatoric part.
#[derive(Clone)]
pub struct DissipationModel {
    /// Stokes viscosity applied as `D eps = bulk tr(eps) I + 2 shear dev(eps)`.
    pub stokes_bulk: f64,
    pub stokes_shear: f64,
    /// hyper-viscosity coefficient (> 0) and exponent (> 3)
    pub hyper_mu: f64,
    pub hyper_p: f64,
    /// `None` disables creep (pure Kelvin-Voigt response).
    pub creep: Option<Arc<dyn CreepPotential>>,
}

impl DissipationModel {
    pub fn validate(&self) -> Result<(), MaterialError> {
        if self.stokes_bulk < 0.0 || self.stokes_shear < 0.0 {
            return Err(MaterialError::InvalidParameter(
                "Stokes viscosity moduli must be nonnegative".into(),
            ));
        }
        if self.hyper_mu <= 0.0 {
            return Err(MaterialError::InvalidParameter(
                "hyper-viscosity coefficient mu must be positive".into(),
            ));
        }
        if self.hyper_p <= 3.0 {
            return Err(MaterialError::InvalidParameter(
                "hyper-viscosity exponent p must exceed 3".into(),
            ));
        }
        Ok(())
    }

    /// D eps for the isotropic Stokes tensor.
    pub fn stokes_apply(&self, eps: &SymTensor3) -> SymTensor3 {
        SymTensor3::spherical(self.stokes_bulk * eps.trace())
            + eps.dev().to_sym().scale(2.0 * self.stokes_shear)
    }

    /// Creep rate R(E, theta) = flow(dev T(E, theta)); zero when creep is off.
    pub fn creep_rate(
        &self,
        material: &MaterialModel,
        e: &SymTensor3,
        theta: f64,
    ) -> Result<DevTensor3, MaterialError> {
        check_theta(theta)?;
        Ok(self.creep_rate_unchecked(material, e, theta))
    }

    pub fn creep_rate_unchecked(
        &self,
        material: &MaterialModel,
        e: &SymTensor3,
        theta: f64,
    ) -> DevTensor3 {
        match &self.creep {
            None => DevTensor3::ZERO,
            Some(c) => {
                let dev_t = material.stress_unchecked(e, theta).dev();
                c.flow(&dev_t, theta)
            }
        }
    }

    /// Extended dissipation rate
    /// `xi = D eps : eps + zeta_p'(theta, Pi) : Pi + mu |H|^p`.
    pub fn dissipation_rate(
        &self,
        theta: f64,
        eps_v: &SymTensor3,
        pi: &DevTensor3,
        h: &ThirdOrderTensor,
    ) -> Result<f64, MaterialError> {
        check_theta(theta)?;
        let stokes = self.stokes_apply(eps_v).dot(eps_v);
        let creep = match &self.creep {
            None => 0.0,
            Some(c) => c.stress_of_rate(pi, theta).dot(pi),
        };
        Ok(stokes + creep + self.hyper_mu * h.norm2().powf(0.5 * self.hyper_p))
    }
}

/// Heat conduction and boundary laws: `kappa(theta) = kappa0 (1 + theta^beta)`
/// and outflux `h(theta) = a1 theta + a2 theta^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatModel {
    pub kappa0: f64,
    pub beta: f64,
    pub h_linear: f64,
    pub h_quartic: f64,
    /// prescribed external influx, uniform over the boundary
    pub external_flux: f64,
    /// nonnegative bulk heat source, uniform over the domain
    pub bulk_source: f64,
}

impl HeatModel {
    pub fn insulated(kappa0: f64, beta: f64) -> Self {
        HeatModel {
            kappa0,
            beta,
            h_linear: 0.0,
            h_quartic: 0.0,
            external_flux: 0.0,
            bulk_source: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let bad = |m: &str| Err(MaterialError::InvalidParameter(m.to_string()));
        if self.kappa0 <= 0.0 {
            return bad("conductivity coefficient kappa0 must be positive");
        }
        if self.beta < 0.0 {
            return bad("conductivity exponent beta must be nonnegative");
        }
        if self.h_linear < 0.0 || self.h_quartic < 0.0 {
            return bad("boundary outflux coefficients must be nonnegative");
        }
        if self.external_flux < 0.0 {
            return bad("external boundary flux must be nonnegative");
        }
        if self.bulk_source < 0.0 {
            return bad("bulk heat source must be nonnegative");
        }
        Ok(())
    }

    pub fn conductivity(&self, theta: f64) -> Result<f64, MaterialError> {
        check_theta(theta)?;
        Ok(self.conductivity_unchecked(theta))
    }

    pub fn conductivity_unchecked(&self, theta: f64) -> f64 {
        if self.beta == 0.0 {
            2.0 * self.kappa0
        } else {
            self.kappa0 * (1.0 + theta.powf(self.beta))
        }
    }

    pub fn conductivity_d(&self, theta: f64) -> f64 {
        if self.beta == 0.0 || theta <= 0.0 {
            0.0
        } else {
            self.kappa0 * self.beta * theta.powf(self.beta - 1.0)
        }
    }

    pub fn boundary_outflux(&self, theta: f64) -> Result<f64, MaterialError> {
        check_theta(theta)?;
        Ok(self.boundary_outflux_unchecked(theta))
    }

    pub fn boundary_outflux_unchecked(&self, theta: f64) -> f64 {
        self.h_linear * theta + self.h_quartic * theta.powf(4.0)
    }

    pub fn boundary_outflux_d(&self, theta: f64) -> f64 {
        self.h_linear + 4.0 * self.h_quartic * theta.powf(3.0)
    }
}

/// Result of the exponent admissibility test for (alpha, beta, lambda).
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentCheck {
    pub admissible: bool,
    /// Largest temperature-gradient integrability exponent when admissible:
    /// `mu_max = (5 + 2 alpha + 3 beta^+ - 3 lambda) / (4 + alpha)`.
    pub mu_max: Option<f64>,
    pub reason: Option<String>,
}

/// Checks the admissibility region
/// `1 + lambda > beta^+ >= (2/3) alpha + lambda - 1/3` and
/// `alpha >= ((3/2) lambda - 1)^+` for `lambda in (0, 2)`, `alpha >= 0`.
pub fn admissible_exponents(alpha: f64, beta: f64, lambda: f64) -> ExponentCheck {
    let fail = |reason: String| ExponentCheck {
        admissible: false,
        mu_max: None,
        reason: Some(reason),
    };
    if !(lambda > 0.0 && lambda < 2.0) {
        return fail(format!("lambda = {lambda} must lie in the open interval (0, 2)"));
    }
    if alpha < 0.0 {
        return fail(format!("alpha = {alpha} must be nonnegative"));
    }
    let beta_plus = beta.max(0.0);
    if beta_plus >= 1.0 + lambda {
        return fail(format!(
            "need 1 + lambda > beta^+ (got 1 + {lambda} <= {beta_plus})"
        ));
    }
    let lower = 2.0 / 3.0 * alpha + lambda - 1.0 / 3.0;
    if beta_plus < lower {
        return fail(format!(
            "need beta^+ >= (2/3) alpha + lambda - 1/3 (got {beta_plus} < {lower})"
        ));
    }
    let alpha_min = (1.5 * lambda - 1.0).max(0.0);
    if alpha < alpha_min {
        return fail(format!(
            "need alpha >= ((3/2) lambda - 1)^+ (got {alpha} < {alpha_min})"
        ));
    }
    let mu_max = (5.0 + 2.0 * alpha + 3.0 * beta_plus - 3.0 * lambda) / (4.0 + alpha);
    ExponentCheck {
        admissible: true,
        mu_max: Some(mu_max),
        reason: None,
    }
}

/// Adaptive Simpson quadrature with relative tolerance.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    if a >= b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    let tol = rel_tol * whole.abs().max(1e-300);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 40)
}

/// Basis tensor for stored symmetric component `m` (unit full-tensor entries
/// at the index pair and, for off-diagonal slots, its transpose).
pub fn sym_basis(m: usize) -> SymTensor3 {
    let mut b = SymTensor3::ZERO;
    b.c[m] = 1.0;
    b
}

/// Trace of the basis tensor for stored component m.
pub fn sym_basis_trace(m: usize) -> f64 {
    if m < 3 {
        1.0
    } else {
        0.0
    }
}

/// Readable names of the stored components, for diagnostics.
pub fn sym_comp_name(m: usize) -> String {
    let (i, j) = SYM_INDEX[m];
    format!("E{}{}", i + 1, j + 1)
}
