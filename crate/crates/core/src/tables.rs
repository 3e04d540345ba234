//! Published optimal parameter sets and their re-evaluation under the
//! crate's own scenarios.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::controllers::{ControllerKind, ControllerParams};
use crate::error::{Error, Result};
use crate::plants::PlantModel;
use crate::simloop::{
    compute_indices, evaluate_params, EvalContext, IndexKind, ObjectiveSpec, Scenario,
};

const TABLE_SOURCES: [&str; 4] = [
    include_str!("../data/table1.json"),
    include_str!("../data/table2.json"),
    include_str!("../data/table3.json"),
    include_str!("../data/table4.json"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantId {
    P1,
    P2,
}

impl PlantId {
    pub fn model(self) -> PlantModel {
        match self {
            PlantId::P1 => PlantModel::p1(),
            PlantId::P2 => PlantModel::p2(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    #[serde(flatten)]
    pub params: ControllerParams,
    pub index: IndexKind,
    pub j_paper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterTable {
    pub table: u8,
    pub plant: PlantId,
    pub rows: Vec<TableRow>,
}

impl ParameterTable {
    /// One of the four bundled tables, `id` in 1..=4.
    pub fn bundled(id: u8) -> Result<Self> {
        let src = match id {
            1..=4 => TABLE_SOURCES[id as usize - 1],
            _ => return Err(Error::Config(format!("no table {id}, expected 1..=4"))),
        };
        Ok(serde_json::from_str(src)?)
    }

    pub fn find(&self, kind: ControllerKind, index: IndexKind) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.params.kind() == kind && r.index == index)
    }
}

/// Published versus re-evaluated objective for one table row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproducedRow {
    pub controller: ControllerKind,
    pub index: IndexKind,
    pub j_paper: f64,
    pub j_ours: f64,
    pub rel_diff: f64,
    pub stable: bool,
}

/// Re-evaluates one row on `scenario`.
pub fn reproduce_row(
    row: &TableRow,
    plant: &PlantModel,
    scenario: &Scenario,
    ctx: &EvalContext,
) -> Result<ReproducedRow> {
    let objective = ObjectiveSpec::new(row.index);
    let trace = ctx.simulate(row.params.clone(), plant, scenario)?;
    let stable = !trace.diverged;
    let j_ours = if stable {
        objective.value(&compute_indices(&trace)?)
    } else {
        evaluate_params(row.params.clone(), plant, &objective, scenario, ctx)?
    };
    Ok(ReproducedRow {
        controller: row.params.kind(),
        index: row.index,
        j_paper: row.j_paper,
        j_ours,
        rel_diff: (j_ours - row.j_paper) / row.j_paper,
        stable,
    })
}

/// Re-evaluates every row of a bundled table. `scenario` defaults to the
/// tuning scenario of the table's plant.
pub fn reproduce_table(id: u8, scenario: Option<&Scenario>) -> Result<Vec<ReproducedRow>> {
    let table = ParameterTable::bundled(id)?;
    let plant = table.plant.model();
    let scenario = scenario.cloned().unwrap_or_else(|| Scenario::tuning(&plant));
    let ctx = EvalContext::default();
    table
        .rows
        .iter()
        .map(|row| reproduce_row(row, &plant, &scenario, &ctx))
        .collect()
}

/// CSV with header `controller,index,J_paper,J_ours,rel_diff,stable`.
pub fn write_reproduction_csv<W: Write>(rows: &[ReproducedRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["controller", "index", "J_paper", "J_ours", "rel_diff", "stable"])?;
    for r in rows {
        w.write_record([
            r.controller.to_string(),
            r.index.to_string(),
            r.j_paper.to_string(),
            r.j_ours.to_string(),
            r.rel_diff.to_string(),
            r.stable.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
