//! Closed-form performance analysis: pairwise error probabilities, jamming
//! probabilities, union-bound ABER and spectrum-efficiency bounds.

mod aber;
mod jam;
mod pep;
mod q;
mod se;

pub use aber::{aber_union_bound, mean_slot_statistics, AberResult, MAX_CANDIDATES};
pub use jam::{clean_hop_prob, jam_prob_hops, jam_prob_modes, jam_prob_modes_exact, JamVariant};
pub use pep::{
    cond_pep_approx, cond_pep_argument, cond_pep_imperfect, cond_pep_perfect, mgf_rician,
    pep_dsmh_imperfect, pep_dsmh_perfect, pep_mgf_assembly, pep_prop1, pep_prop2, PepContext,
    PepSlot,
};
pub use q::{q_approx, q_exact};
pub use se::{mean_gains_sq, se_dsmh, se_for, se_immh, SeResult};

pub(crate) use pep::pep_closed_form;
