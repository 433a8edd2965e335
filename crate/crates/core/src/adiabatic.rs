//! Effective-operator adiabatic elimination of fast excited states, and the
//! two ion-phonon models it is applied to.
//!
//! Tensor order everywhere is ion 1 ⊗ ion 2 ⊗ phonon.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fock::{annihilation_op, creation_op, FockSpace};
use crate::linalg::{re, CMatrix, Operator, I};
use crate::master_eq::{phonon_hamiltonian, Channel, LindbladModel};
use crate::params::{EffectiveRates, ExperimentParams};

/// Block decomposition of a model with ground (slow) and excited (fast)
/// subspaces. The excited projector must be diagonal in the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedModel {
    pub h_ground: Operator,
    pub h_excited: Operator,
    /// Ground → excited part of the coupling, P_e V P_g.
    pub v_plus: Operator,
    pub v_minus: Operator,
    /// Jump operators; each must annihilate the ground subspace.
    pub jumps: Vec<Operator>,
    pub excited_projector: Operator,
}

fn scale_of<'a>(ops: impl IntoIterator<Item = &'a Operator>) -> f64 {
    ops.into_iter().map(Operator::max_abs).fold(1.0, f64::max)
}

fn excited_indices(p_e: &Operator) -> Result<Vec<usize>> {
    let mut idx = Vec::new();
    for (r, c, v) in p_e.iter() {
        let is_one = (v - re(1.0)).norm() <= 1e-12;
        if r != c || !(is_one || v.norm() <= 1e-12) {
            return Err(Error::InvalidPartition("excited projector must be diagonal with 0/1 entries".into()));
        }
        if is_one {
            idx.push(r);
        }
    }
    if idx.is_empty() {
        return Err(Error::InvalidPartition("excited subspace is empty".into()));
    }
    Ok(idx)
}

impl PartitionedModel {
    pub fn new(
        h_ground: Operator,
        h_excited: Operator,
        v_plus: Operator,
        jumps: Vec<Operator>,
        excited_projector: Operator,
    ) -> Result<Self> {
        let v_minus = v_plus.dagger();
        let m = Self { h_ground, h_excited, v_plus, v_minus, jumps, excited_projector };
        m.validate()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.excited_projector.dim()
    }

    pub fn ground_projector(&self) -> Operator {
        &Operator::identity(self.dim()) - &self.excited_projector
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        for op in [&self.h_ground, &self.h_excited, &self.v_plus, &self.v_minus].into_iter().chain(&self.jumps) {
            if op.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
            }
        }
        excited_indices(&self.excited_projector)?;
        let pe = &self.excited_projector;
        let pg = self.ground_projector();
        let tol = 1e-12 * scale_of([&self.h_ground, &self.h_excited, &self.v_plus].into_iter().chain(&self.jumps));
        let fail = |what: &str, err: f64| Error::InvalidPartition(format!("{what} (deviation {err:.3e})"));
        let e = self.v_plus.max_abs_diff(&pe.matmul(&self.v_plus).matmul(&pg));
        if e > tol {
            return Err(fail("V+ must map ground into excited", e));
        }
        let e = self.v_minus.max_abs_diff(&self.v_plus.dagger());
        if e > tol {
            return Err(fail("V- must equal V+†", e));
        }
        let e = self.h_ground.max_abs_diff(&pg.matmul(&self.h_ground).matmul(&pg));
        if e > tol {
            return Err(fail("H_g must act on the ground subspace", e));
        }
        let e = self.h_excited.max_abs_diff(&pe.matmul(&self.h_excited).matmul(pe));
        if e > tol {
            return Err(fail("H_e must act on the excited subspace", e));
        }
        for l in &self.jumps {
            let e = l.matmul(&pg).max_abs();
            if e > tol {
                return Err(fail("jump operators must annihilate the ground subspace", e));
            }
        }
        Ok(())
    }
}

/// H_NH = H_e − (i/2) Σ_k L_k†L_k.
pub fn non_hermitian_h(model: &PartitionedModel) -> Operator {
    let mut h = model.h_excited.clone();
    for l in &model.jumps {
        h = &h - &l.dagger().matmul(l).scale(I * 0.5);
    }
    h
}

/// Inverse of `h_nh` restricted to the excited subspace, zero elsewhere.
pub fn restricted_inverse(h_nh: &Operator, excited_projector: &Operator) -> Result<Operator> {
    if h_nh.dim() != excited_projector.dim() {
        return Err(Error::DimensionMismatch { expected: excited_projector.dim(), found: h_nh.dim() });
    }
    let idx = excited_indices(excited_projector)?;
    let n = idx.len();
    let block = CMatrix::from_fn(n, |i, j| h_nh.get(idx[i], idx[j]));
    let sv = block.singular_values();
    let (largest, smallest) = (sv.first().copied().unwrap_or(0.0), sv.last().copied().unwrap_or(0.0));
    if !(largest > 0.0) || smallest <= 1e-12 * largest {
        return Err(Error::SingularRestriction { smallest, largest });
    }
    let inv = block.inverse().ok_or(Error::SingularRestriction { smallest, largest })?;
    Ok(Operator::from_triplets(
        h_nh.dim(),
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (idx[i], idx[j], inv[(i, j)])),
    ))
}

/// Effective ground-subspace dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveModel {
    pub h_eff: Operator,
    pub jumps: Vec<Operator>,
}

impl EffectiveModel {
    pub fn dim(&self) -> usize {
        self.h_eff.dim()
    }

    /// Restrict every operator to the basis states `indices`.
    pub fn restrict(&self, indices: &[usize]) -> EffectiveModel {
        let cut = |op: &Operator| {
            let n = indices.len();
            Operator::from_triplets(
                n,
                (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, op.get(indices[i], indices[j]))),
            )
        };
        EffectiveModel { h_eff: cut(&self.h_eff), jumps: self.jumps.iter().map(cut).collect() }
    }

    /// Lindblad model with unit rates on the effective jumps.
    pub fn lindblad(&self) -> Result<LindbladModel> {
        LindbladModel::new(self.h_eff.clone(), self.jumps.iter().map(|l| Channel { rate: 1.0, jump: l.clone() }).collect())
    }
}

/// H_eff = −½ V₋ (H_NH⁻¹ + (H_NH⁻¹)†) V₊ + H_g and L_k,eff = L_k H_NH⁻¹ V₊.
pub fn eliminate(model: &PartitionedModel) -> Result<EffectiveModel> {
    model.validate()?;
    let x = restricted_inverse(&non_hermitian_h(model), &model.excited_projector)?;
    let sym = &x + &x.dagger();
    let shift = model.v_minus.matmul(&sym).matmul(&model.v_plus).scale_re(-0.5);
    let h_eff = &shift + &model.h_ground;
    let xv = x.matmul(&model.v_plus);
    let jumps: Vec<Operator> = model.jumps.iter().map(|l| l.matmul(&xv)).collect();
    let tol = 1e-12 * h_eff.max_abs().max(1.0);
    let herm = h_eff.hermiticity_error();
    if herm > tol {
        return Err(Error::InvalidPartition(format!("effective Hamiltonian not Hermitian (error {herm:.3e})")));
    }
    Ok(EffectiveModel { h_eff, jumps })
}

/// |row⟩⟨col| on an ion with `levels` levels.
pub fn ion_op(levels: usize, row: usize, col: usize) -> Operator {
    Operator::from_triplets(levels, [(row, col, re(1.0))])
}

/// Place single-ion operators and a phonon operator in the joint space.
struct Layout {
    levels: usize,
    space: FockSpace,
}

impl Layout {
    fn ion1(&self, op: &Operator) -> Operator {
        op.kron(&Operator::identity(self.levels)).kron(&Operator::identity(self.space.dim()))
    }
    fn ion2(&self, op: &Operator) -> Operator {
        Operator::identity(self.levels).kron(op).kron(&Operator::identity(self.space.dim()))
    }
    fn phonon(&self, op: &Operator) -> Operator {
        op.embed(self.levels * self.levels, 1)
    }
    fn ion_pair(&self, a: &Operator, b: &Operator) -> Operator {
        a.kron(b).kron(&Operator::identity(self.space.dim()))
    }
    fn dim(&self) -> usize {
        self.levels * self.levels * self.space.dim()
    }
}

/// Stage 1: three-level ions |0⟩ = S, |1⟩ = D, |2⟩ = P. The 854 nm laser
/// couples |1⟩ ↔ |2⟩ with Rabi frequency Ω_e and |2⟩ decays to |0⟩ at γ.
/// Ground subspace: both ions in {|0⟩, |1⟩}. The phonon Hamiltonian acts on
/// the ground subspace; the excited Hamiltonian is zero.
pub fn build_stage1_model(params: &ExperimentParams, space: FockSpace) -> Result<PartitionedModel> {
    params.validate()?;
    let lay = Layout { levels: 3, space };
    let low = &ion_op(3, 0, 0) + &ion_op(3, 1, 1);
    let pg = lay.ion_pair(&low, &low);
    let pe = &Operator::identity(lay.dim()) - &pg;
    let up = ion_op(3, 2, 1).scale_re(0.5 * params.omega_e_rabi);
    let v = &(&lay.ion1(&up) + &lay.ion1(&up.dagger())) + &(&lay.ion2(&up) + &lay.ion2(&up.dagger()));
    let v_plus = pe.matmul(&v).matmul(&pg);
    let h_a = lay.phonon(&phonon_hamiltonian(params.delta, params.epsilon, space));
    let h_ground = pg.matmul(&h_a).matmul(&pg);
    let jump = ion_op(3, 0, 2).scale_re(params.gamma.sqrt());
    let jumps = vec![lay.ion1(&jump), lay.ion2(&jump)];
    PartitionedModel::new(h_ground, Operator::zeros(lay.dim()), v_plus, jumps, pe)
}

/// Stage-2 coupling V for two-level ions: the gain sideband on ion 1 and the
/// two-phonon sideband on ion 2.
fn stage2_coupling(params: &ExperimentParams, rates: &EffectiveRates, lay: &Layout) -> Operator {
    let a = annihilation_op(lay.space);
    let ad = creation_op(lay.space);
    let sp = ion_op(2, 1, 0);
    let sm = ion_op(2, 0, 1);
    let c1 = 0.5 * rates.eta1_tilde * params.omega1_rabi;
    let c2 = 0.5 * rates.eta2_tilde * params.omega2_rabi;
    let ion = Operator::identity(2);
    let gain = &sm.kron(&ion).kron(&a) + &sp.kron(&ion).kron(&ad);
    let damp = &ion.kron(&sp).kron(&a.matmul(&a)) + &ion.kron(&sm).kron(&ad.matmul(&ad));
    &gain.scale_re(c1) + &damp.scale_re(c2)
}

/// Stage 2: two-level ions |0⟩ = S, |1⟩ = D decaying at the effective rate Γ,
/// jumps i√Γ σ₋. Ground subspace: both ions in |0⟩.
pub fn build_stage2_model(params: &ExperimentParams, rates: &EffectiveRates, space: FockSpace) -> Result<PartitionedModel> {
    params.validate()?;
    let lay = Layout { levels: 2, space };
    let g0 = ion_op(2, 0, 0);
    let pg = lay.ion_pair(&g0, &g0);
    let pe = &Operator::identity(lay.dim()) - &pg;
    let v_plus = pe.matmul(&stage2_coupling(params, rates, &lay)).matmul(&pg);
    let h_a = lay.phonon(&phonon_hamiltonian(params.delta, params.epsilon, space));
    let h_ground = pg.matmul(&h_a).matmul(&pg);
    let jump = ion_op(2, 0, 1).scale(I * rates.big_gamma.sqrt());
    let jumps = vec![lay.ion1(&jump), lay.ion2(&jump)];
    PartitionedModel::new(h_ground, Operator::zeros(lay.dim()), v_plus, jumps, pe)
}

/// Full stage-2 Lindblad model before elimination: H = H_a + V with decay
/// Γ·D[σ₋] on each ion.
pub fn stage2_full_model(params: &ExperimentParams, rates: &EffectiveRates, space: FockSpace) -> Result<LindbladModel> {
    params.validate()?;
    let lay = Layout { levels: 2, space };
    let h = &lay.phonon(&phonon_hamiltonian(params.delta, params.epsilon, space)) + &stage2_coupling(params, rates, &lay);
    let sm = ion_op(2, 0, 1);
    LindbladModel::new(
        h,
        vec![Channel { rate: rates.big_gamma, jump: lay.ion1(&sm) }, Channel { rate: rates.big_gamma, jump: lay.ion2(&sm) }],
    )
}

/// Basis indices of |0, 0⟩ ⊗ |n⟩ for n = 0..d in the stage-2 space.
pub fn stage2_ground_indices(space: FockSpace) -> Vec<usize> {
    (0..space.dim()).collect()
}

/// Joint state |0, 0⟩⟨0, 0| ⊗ ρ_phonon.
pub fn stage2_embed(rho: &CMatrix) -> CMatrix {
    let d = rho.dim();
    let mut m = CMatrix::zeros(4 * d);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = rho[(i, j)];
        }
    }
    m
}

/// Decay rate encoded by an effective jump L with L†L = rate · O, read off
/// at the basis state where O has diagonal entry `weight`.
pub fn rate_from_jump(jump: &Operator, index: usize, weight: f64) -> f64 {
    jump.dagger().matmul(jump).get(index, index).re / weight
}
