//! Long-format `(x, y, group)` series for external plotting tools.

use crate::dataset::{Dataset, Row, Table, OK};
use crate::error::{ExperimentError, Result};

pub const PLOT_HEADER: [&str; 3] = ["x", "y", "group"];

/// Columns read for each kind: x, y and the group columns.
fn layout(kind: &str) -> Result<(&'static str, &'static str, &'static [&'static str])> {
    match kind {
        "size-sweep" => Ok(("iter", "improvement", &["num_states", "num_actions", "seed"])),
        "reward-diameter" | "cp-sweep" => Ok(("iter", "improvement", &["param", "seed"])),
        "constant-scaling" => Ok(("num_actions", "value", &["family", "quantity", "num_states"])),
        "bound-verify" => Ok(("iter", "gap", &["seed"])),
        "discount-compare" => Ok(("gamma", "error", &["seed"])),
        other => Err(ExperimentError::UnknownKind(other.to_string())),
    }
}

/// Reshapes a dataset into `x,y,group` rows, skipping failed rows and
/// rows without a y value. Rows keep the dataset's order.
pub fn emit_plotdata(table: &Table, kind: &str) -> Result<Dataset> {
    let (x, y, groups) = layout(kind)?;
    let mut out = Dataset::new("plotdata", 1, &PLOT_HEADER);
    if table.rows.is_empty() {
        return Ok(out);
    }
    let col = |name: &str| {
        table
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ExperimentError::MissingColumn(name.to_string()))
    };
    let (xi, yi) = (col(x)?, col(y)?);
    let gi = groups.iter().map(|g| col(g)).collect::<Result<Vec<_>>>()?;
    let status = table.header.iter().position(|h| h == "status");
    for row in &table.rows {
        if status.is_some_and(|s| row[s] != OK) || row[yi].is_empty() {
            continue;
        }
        let group = groups
            .iter()
            .zip(&gi)
            .map(|(name, &i)| format!("{name}={}", row[i]))
            .collect::<Vec<_>>()
            .join(";");
        out.push(Row::new(vec![], vec![row[xi].clone(), row[yi].clone(), group]));
    }
    Ok(out)
}
