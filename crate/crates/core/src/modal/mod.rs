//! Nonlinear transient response through modal decomposition.

pub mod cascade;
pub mod pencil;
pub mod pipeline;

pub use cascade::{cascade_modal, eval_modal, eval_modal_complex, ModalCascadeCoefficients};
pub use pencil::{
    extract_modes, extract_modes_with, reconstruction_error, ModalFit, ModalSum, Mode,
    PencilOptions,
};
pub use pipeline::{input_trace, nonlinear_response, nonlinear_response_with, NonlinearResponse};
