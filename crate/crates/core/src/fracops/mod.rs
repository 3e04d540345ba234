//! Band-limited fractional differ-integrators.
//!
//! A real order is split into an exact integer operator and a fractional
//! remainder. The remainder is rationalized with Oustaloup's recursive
//! filter, discretized with the bilinear rule, and stepped sample by sample.
//! [`gl_oracle`] provides an independent Grünwald–Letnikov reference.

mod discrete;
mod gl;
mod operator;
mod oustaloup;

use std::io::Write;

pub use discrete::{discretize, DiscreteFilter};
pub use gl::{gl_oracle, gl_weights};
pub use operator::{split_order, DiscreteOperator, FractionalOperator};
pub use oustaloup::{bode_point, log_space, OustaloupBand, OustaloupFilter};

use crate::error::Result;

/// Writes `omega_rad_s,mag_db,phase_deg` rows for `filter` at each frequency.
pub fn write_frequency_response<W: Write>(
    filter: &OustaloupFilter,
    omegas: &[f64],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega_rad_s", "mag_db", "phase_deg"])?;
    for &omega in omegas {
        let (mag, phase) = bode_point(filter.frequency_response(omega)?);
        w.write_record([omega.to_string(), mag.to_string(), phase.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
