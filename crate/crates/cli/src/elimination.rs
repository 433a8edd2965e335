//! `eliminate` subcommand: run both adiabatic-elimination stages on a
//! member's laser parameters and compare with the closed-form operators.

use phonon_tc_core::adiabatic::{build_stage1_model, build_stage2_model, eliminate, ion_op, rate_from_jump, stage2_ground_indices};
use phonon_tc_core::fock::{annihilation_op, creation_op, FockSpace};
use phonon_tc_core::linalg::{Operator, I};
use phonon_tc_core::master_eq::phonon_hamiltonian;
use phonon_tc_core::params::effective_decay;
use phonon_tc_core::presets::Member;
use serde::Serialize;

use crate::failure::Failure;

#[derive(Clone, Debug, Serialize)]
pub struct Stage1Report {
    /// Γ = Ω_e²/γ, rad/ms.
    pub big_gamma: f64,
    /// max |L_eff − i√Γσ₋| over both ions, entrywise.
    pub jump_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stage2Report {
    /// Coefficients c₁ = η̃₁Ω₁/√Γ and c₂ = η̃₂Ω₂/√Γ.
    pub c1: f64,
    pub c2: f64,
    /// max |L₁ − (−c₁ a†|00⟩⟨00|)| entrywise.
    pub gain_jump_error: f64,
    /// max |L₂ − (−c₂ a²|00⟩⟨00|)| entrywise.
    pub damping_jump_error: f64,
    /// Rates read back from L†L, rad/ms.
    pub g_from_jump: f64,
    pub kappa_from_jump: f64,
    pub g_formula: f64,
    pub kappa_formula: f64,
    /// max |H_eff − H_a| on the ground block.
    pub hamiltonian_error: f64,
    /// Ground-block jumps as [re, im] pairs, row-major.
    pub gain_jump: Vec<Vec<[f64; 2]>>,
    pub damping_jump: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EliminationReport {
    pub label: String,
    pub fock_dim: usize,
    pub stage1: Stage1Report,
    pub stage2: Stage2Report,
}

fn entrywise(a: &Operator, b: &Operator) -> f64 {
    a.to_dense().max_abs_diff(&b.to_dense())
}

fn pairs(op: &Operator) -> Vec<Vec<[f64; 2]>> {
    let d = op.dim();
    (0..d).map(|i| (0..d).map(|j| op.get(i, j)).map(|z| [z.re, z.im]).collect()).collect()
}

pub fn eliminate_member(m: &Member, fock_dim: usize) -> Result<EliminationReport, Failure> {
    let p = m.params.as_ref().ok_or_else(|| Failure::Validation(format!("{}: no laser parameters to eliminate", m.label)))?;
    let space = FockSpace::new(fock_dim)?;
    let id = Operator::identity(fock_dim);

    let s1 = eliminate(&build_stage1_model(p, space)?)?;
    let big_gamma = effective_decay(p)?;
    let sm = ion_op(3, 0, 1).scale(I * big_gamma.sqrt());
    let low = &ion_op(3, 0, 0) + &ion_op(3, 1, 1);
    let want = [sm.kron(&low).kron(&id), low.kron(&sm).kron(&id)];
    let jump_error = s1.jumps.iter().zip(&want).map(|(a, b)| entrywise(a, b)).fold(0.0, f64::max);

    let r = &m.rates;
    let s2 = eliminate(&build_stage2_model(p, r, space)?)?;
    let c1 = r.eta1_tilde * p.omega1_rabi / r.big_gamma.sqrt();
    let c2 = r.eta2_tilde * p.omega2_rabi / r.big_gamma.sqrt();
    let ground = ion_op(2, 0, 0).kron(&ion_op(2, 0, 0));
    let a = annihilation_op(space);
    let gain_want = ground.kron(&creation_op(space)).scale_re(-c1);
    let damp_want = ground.kron(&a.matmul(&a)).scale_re(-c2);
    let red = s2.restrict(&stage2_ground_indices(space));
    Ok(EliminationReport {
        label: m.label.clone(),
        fock_dim,
        stage1: Stage1Report { big_gamma, jump_error },
        stage2: Stage2Report {
            c1,
            c2,
            gain_jump_error: entrywise(&s2.jumps[0], &gain_want),
            damping_jump_error: entrywise(&s2.jumps[1], &damp_want),
            g_from_jump: rate_from_jump(&red.jumps[0], 0, 1.0),
            kappa_from_jump: rate_from_jump(&red.jumps[1], 2, 2.0),
            g_formula: r.g,
            kappa_formula: r.kappa,
            hamiltonian_error: entrywise(&red.h_eff, &phonon_hamiltonian(p.delta, p.epsilon, space)),
            gain_jump: pairs(&red.jumps[0]),
            damping_jump: pairs(&red.jumps[1]),
        },
    })
}
