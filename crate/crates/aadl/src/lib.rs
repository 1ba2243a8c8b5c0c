//! Importer for a small textual AADL subset.
//!
//! [`import_architecture`] turns component declarations into an
//! [`ArchitectureModel`]: one element per component instance, port and
//! connection, with ids built from the instance path (`RPM.HPC.SDM`).
//! Problems are reported as [`ImportDiagnostic`]s and never abort the import;
//! the offending item is left out of the model.

mod diagnostic;
mod export;
mod instance;
mod lexer;
mod parser;

pub use diagnostic::{ImportDiagnostic, Severity, Span};
pub use export::{export_aadl, ExportError};
pub use parser::{parse, Category, Unit};

use reqimpact_core::model::ArchitectureModel;

pub fn import_architecture(text: &str) -> (ArchitectureModel, Vec<ImportDiagnostic>) {
    let (unit, mut diags) = parse(text);
    let (model, more) = instance::instantiate(&unit);
    diags.extend(more);
    diags.sort_by_key(|d| (d.line, d.column));
    (model, diags)
}

pub fn has_errors(diags: &[ImportDiagnostic]) -> bool {
    diags.iter().any(ImportDiagnostic::is_error)
}
