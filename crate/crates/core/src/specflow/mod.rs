//! Quasi-adiabatic spectral flow: the weight `W_γ`, the generator `D_Λ(s)`,
//! its flow, and the envelopes controlling the generator's cut dependence.

pub mod envelope;
pub mod flow;
pub mod weight;

pub use envelope::{
    generator_split_envelope, omega1, omega2, q_envelope, EnvelopeParams, Omega2, Omega2Prefactor, QPowers,
    SeriesSum, WeightNorms,
};
pub use flow::{
    derivative_hamiltonian, generator_split_defect, generator_with_kernel, hastings_generator, spectral_flow_unitary,
    split_generator, FlowOptions, FlowResult, Generator, SineKernel, SplitGeneratorReport,
};
pub use weight::{check_i_gamma, i_gamma_envelope, weight_function, IGammaCheck, IGammaEnvelope, WeightFunction};
