use std::fmt;

use super::{PaKind, ResultRow, SaKind, ScenarioKind};
use crate::metrics::MeanEstimate;
use crate::multicell::Group;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryKey {
    pub scenario: ScenarioKind,
    pub sa: SaKind,
    pub pa: PaKind,
    pub chunk_size: usize,
    pub snr_db: Option<f64>,
    pub group: Option<Group>,
}

impl SummaryKey {
    fn of(row: &ResultRow) -> Self {
        Self {
            scenario: row.scenario,
            sa: row.scheme.sa,
            pa: row.scheme.pa,
            chunk_size: row.chunk_size,
            snr_db: row.snr_db,
            group: row.group,
        }
    }
}

/// Trial means and 95% half-widths for one (scheme, sweep point, group).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub key: SummaryKey,
    pub errors: usize,
    pub min_rate: MeanEstimate,
    pub min_weighted_rate: MeanEstimate,
    pub sum_rate: MeanEstimate,
    /// Over trials where the deviation is defined.
    pub deviation: MeanEstimate,
    pub norm_sum_rate: MeanEstimate,
    pub norm_min_weighted_rate: MeanEstimate,
}

#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    /// Groups rows by key in order of first appearance.
    pub fn from_rows(rows: &[ResultRow]) -> Self {
        let mut keys: Vec<SummaryKey> = Vec::new();
        for r in rows {
            let k = SummaryKey::of(r);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        let rows = keys
            .into_iter()
            .map(|key| {
                let members: Vec<&ResultRow> = rows.iter().filter(|r| SummaryKey::of(r) == key).collect();
                let ok: Vec<_> = members.iter().filter_map(|r| r.metrics.as_ref()).collect();
                let col = |f: &dyn Fn(&ResultRow) -> Option<f64>| {
                    MeanEstimate::from_samples(&members.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
                };
                SummaryRow {
                    key,
                    errors: members.len() - ok.len(),
                    min_rate: col(&|r| r.metrics.as_ref().map(|m| m.min_rate)),
                    min_weighted_rate: col(&|r| r.metrics.as_ref().map(|m| m.min_weighted_rate)),
                    sum_rate: col(&|r| r.metrics.as_ref().map(|m| m.sum_rate)),
                    deviation: col(&|r| r.metrics.as_ref().and_then(|m| m.deviation)),
                    norm_sum_rate: col(&|r| r.norm_sum_rate),
                    norm_min_weighted_rate: col(&|r| r.norm_min_weighted_rate),
                }
            })
            .collect();
        Self { rows }
    }

    pub fn find(
        &self,
        sa: SaKind,
        pa: PaKind,
        chunk_size: usize,
        snr_db: Option<f64>,
        group: Option<Group>,
    ) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| {
            r.key.sa == sa
                && r.key.pa == pa
                && r.key.chunk_size == chunk_size
                && r.key.snr_db == snr_db
                && r.key.group == group
        })
    }
}

fn cell(e: &MeanEstimate) -> String {
    if e.count == 0 {
        "-".into()
    } else {
        format!("{:.4e} ± {:.1e}", e.mean, e.half_width)
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<18} {:<10} {:<8} {:>4} {:>6} {:<6} {:>6} {:>6}  {:<22} {:<22} {:<22} {:<22}",
            "scenario", "sa", "pa", "L", "snr", "group", "trials", "errors", "min_rate", "min_weighted_rate", "sum_rate", "deviation"
        )?;
        for r in &self.rows {
            let k = &r.key;
            writeln!(
                f,
                "{:<18} {:<10} {:<8} {:>4} {:>6} {:<6} {:>6} {:>6}  {:<22} {:<22} {:<22} {:<22}",
                k.scenario.label(),
                k.sa.label(),
                k.pa.label(),
                k.chunk_size,
                k.snr_db.map(|s| format!("{s}")).unwrap_or_else(|| "-".into()),
                k.group.map_or("all", Group::label),
                r.min_weighted_rate.count,
                r.errors,
                cell(&r.min_rate),
                cell(&r.min_weighted_rate),
                cell(&r.sum_rate),
                cell(&r.deviation),
            )?;
        }
        Ok(())
    }
}
