use rctk_core::catalog::entries;
use rctk_core::specdens::Statistics;

use super::say;
use crate::error::Result;

pub fn list(log: &mut dyn std::io::Write) -> Result<()> {
    say(log, format!("{:<16} {:<10} {:<18} {:<11} formula", "family", "statistics", "parameters", "recursable"));
    for e in entries() {
        let stats = match e.statistics {
            Statistics::BosonicOdd => "bosonic",
            Statistics::FermionicFullAxis => "fermionic",
        };
        say(log, format!("{:<16} {:<10} {:<18} {:<11} {}", e.id, stats, e.params.join(","), e.recursable, e.formula));
    }
    Ok(())
}
