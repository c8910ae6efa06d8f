use std::io::Write;

use super::world::World;

pub const TRACE_HEADER: &str = "slot,user,channel,outcome,state,action,scan";

/// Steps `world` for `slots` slots and writes one CSV row per user and
/// slot. The scan set is `;`-separated.
pub fn write_trace<W: Write>(world: &mut World, slots: usize, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for _ in 0..slots {
        let rec = world.step();
        let scan = rec.scan.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";");
        for (id, u) in rec.users.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                rec.slot,
                id,
                u.channel,
                u.outcome.as_str(),
                u.state,
                u.action,
                scan
            )?;
        }
    }
    Ok(())
}
