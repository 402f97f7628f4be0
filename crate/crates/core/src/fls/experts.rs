use std::collections::BTreeMap;
use std::path::Path;

use crate::fls::{FlsError, FlsSystem, FuzzyRule};

/// Lower-height reduction per unit disagreement.
pub const DEFAULT_WIDENING: f64 = 0.5;

/// Widened heights never drop below this.
const MIN_HEIGHT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertRuleTable {
    pub expert_id: String,
    /// Consequent label per antecedent cell.
    pub cells: BTreeMap<Vec<String>, String>,
}

impl ExpertRuleTable {
    pub fn from_rules(expert_id: impl Into<String>, rules: &[FuzzyRule]) -> Self {
        Self {
            expert_id: expert_id.into(),
            cells: rules.iter().map(|r| (r.antecedent.clone(), r.consequent.clone())).collect(),
        }
    }
}

/// Every antecedent combination of `system`, first input varying slowest.
pub fn rule_grid(system: &FlsSystem) -> Vec<Vec<String>> {
    let mut grid = vec![Vec::new()];
    for var in &system.inputs {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                var.terms.iter().map(move |t| {
                    let mut cell = prefix.clone();
                    cell.push(t.label.clone());
                    cell
                })
            })
            .collect();
    }
    grid
}

fn check_table(system: &FlsSystem, grid: &[Vec<String>], table: &ExpertRuleTable) -> Result<(), FlsError> {
    if table.cells.len() != grid.len() {
        return Err(FlsError::GridMismatch(format!(
            "expert {} has {} cells, grid has {}",
            table.expert_id,
            table.cells.len(),
            grid.len()
        )));
    }
    for cell in grid {
        let label = table
            .cells
            .get(cell)
            .ok_or_else(|| FlsError::GridMismatch(format!("expert {} misses cell {cell:?}", table.expert_id)))?;
        if system.output.term_index(label).is_none() {
            return Err(FlsError::GridMismatch(format!("expert {} uses unknown label {label:?}", table.expert_id)));
        }
    }
    Ok(())
}

/// Builds a rulebase from expert tables over the input grid of `base`.
///
/// Each cell takes the majority consequent, ties going to the lower output
/// term. The lower height of each output term shrinks by
/// `widening * rate`, where `rate` is the fraction of cells mentioning the
/// term on which the experts are not unanimous.
pub fn aggregate_experts(tables: &[ExpertRuleTable], base: &FlsSystem, widening: f64) -> Result<FlsSystem, FlsError> {
    if tables.is_empty() {
        return Err(FlsError::GridMismatch("no expert tables".into()));
    }
    let grid = rule_grid(base);
    for t in tables {
        check_table(base, &grid, t)?;
    }
    let n_out = base.output.terms.len();
    let mut mentions = vec![0usize; n_out];
    let mut disputed = vec![0usize; n_out];
    let mut rules = Vec::with_capacity(grid.len());
    for cell in &grid {
        let mut counts = vec![0usize; n_out];
        for t in tables {
            counts[base.output.term_index(&t.cells[cell]).expect("checked")] += 1;
        }
        let unanimous = counts.iter().filter(|&&c| c > 0).count() == 1;
        for (k, &c) in counts.iter().enumerate() {
            if c > 0 {
                mentions[k] += 1;
                if !unanimous {
                    disputed[k] += 1;
                }
            }
        }
        // Strict comparison keeps the first, i.e. lowest, maximal label.
        let mut winner = 0;
        for k in 1..n_out {
            if counts[k] > counts[winner] {
                winner = k;
            }
        }
        rules.push(FuzzyRule { antecedent: cell.clone(), consequent: base.output.terms[winner].label.clone() });
    }
    let mut output = base.output.clone();
    for (k, term) in output.terms.iter_mut().enumerate() {
        if disputed[k] > 0 {
            let rate = disputed[k] as f64 / mentions[k] as f64;
            term.mf.height = (term.mf.height - widening * rate).max(MIN_HEIGHT);
        }
    }
    FlsSystem::new(base.inputs.clone(), output, rules)
}

/// CSV with one column per input variable, then one column per expert.
pub fn write_expert_tables(path: impl AsRef<Path>, system: &FlsSystem, tables: &[ExpertRuleTable]) -> Result<(), FlsError> {
    let grid = rule_grid(system);
    for t in tables {
        check_table(system, &grid, t)?;
    }
    let fmt = |e: csv::Error| FlsError::Format(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(fmt)?;
    let header: Vec<&str> =
        system.input_names().into_iter().chain(tables.iter().map(|t| t.expert_id.as_str())).collect();
    w.write_record(&header).map_err(fmt)?;
    for cell in &grid {
        let row: Vec<&str> =
            cell.iter().map(String::as_str).chain(tables.iter().map(|t| t.cells[cell].as_str())).collect();
        w.write_record(&row).map_err(fmt)?;
    }
    w.flush().map_err(|e| FlsError::Format(e.to_string()))
}

pub fn read_expert_tables(path: impl AsRef<Path>, system: &FlsSystem) -> Result<Vec<ExpertRuleTable>, FlsError> {
    let fmt = |e: csv::Error| FlsError::Format(e.to_string());
    let mut r = csv::Reader::from_path(path).map_err(fmt)?;
    let header = r.headers().map_err(fmt)?.clone();
    let names = system.input_names();
    let n = names.len();
    if header.len() <= n || header.iter().take(n).ne(names.iter().copied()) {
        return Err(FlsError::GridMismatch(format!("header {:?} does not start with {names:?}", header)));
    }
    let mut tables: Vec<ExpertRuleTable> = header
        .iter()
        .skip(n)
        .map(|id| ExpertRuleTable { expert_id: id.to_string(), cells: BTreeMap::new() })
        .collect();
    for rec in r.records() {
        let rec = rec.map_err(fmt)?;
        let cell: Vec<String> = rec.iter().take(n).map(str::to_string).collect();
        for (t, label) in tables.iter_mut().zip(rec.iter().skip(n)) {
            if t.cells.insert(cell.clone(), label.to_string()).is_some() {
                return Err(FlsError::GridMismatch(format!("duplicate cell {cell:?}")));
            }
        }
    }
    let grid = rule_grid(system);
    for t in &tables {
        check_table(system, &grid, t)?;
    }
    Ok(tables)
}
