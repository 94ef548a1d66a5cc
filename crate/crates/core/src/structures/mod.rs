//! Hamiltonian structures of the reduced systems: the algebraic conditions,
//! the separability dichotomy, densities, affinors and the family catalogue.

mod affinor;
mod catalogue;
mod conditions;
mod density;
mod separability;
mod verify;

pub use affinor::{
    affinor_n2_closed, build_affinor, Affinor, AffinorField, AffinorGenerators, CONSTRAINT_TOL,
};
pub use catalogue::{
    AffinorConfig, Catalogue, FamilyConfig, FamilyEntry, FamilyInstance, KernelRef, OneOrMany,
    Regime, CONFIG_DIR_ENV, TEMPLATE_DEGREE, TEMPLATE_GRID,
};
pub use conditions::{
    fit_cc_template, residual_cc_conditions, residual_flat_conditions, TemplateFit,
};
pub use density::{
    flow_from_density, flow_mismatch, hamiltonian_density, reconstruct_flow, DensityFn, FLOW_TOL,
};
pub use separability::{default_grid, separability_probe, SeparabilityReport, SEPARABLE_TOL};
pub use verify::{
    instance_samples, verify_family, verify_instance, AlgebraicReport, FlowReport,
    VerificationBundle, ALGEBRAIC_TOL, CURVATURE_MATCH_TOL, FLOW_POINTS,
};
