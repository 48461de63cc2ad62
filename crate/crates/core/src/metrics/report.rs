//! ECD tables, milestone heatmap tables and the on-disk analysis outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::rank::{rank_scenario, Epsilon, RankOutcome, Verdict};
use super::{Dataset, RelativeError};
use crate::error::{Error, Result};
use crate::harness::{Scenario, Space};

/// Class labels of the full testbed.
pub const M1_CLASS_LABELS: [&str; 13] = [
    "NAT1", "NAT7", "CBFM", "TILE", "FCL", "3DLAT", "BPSP", "DREG03", "SOCs", "SOCu", "SK", "CDMA", "DAIG",
];

/// The embedded classes, which have distinct logical and physical inputs.
pub const M2_CLASS_LABELS: [&str; 8] = ["3DLAT", "BPSP", "DREG03", "SOCs", "SOCu", "SK", "CDMA", "DAIG"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdRow {
    pub solver: String,
    /// 1-based position in increasing order of error.
    pub rank: usize,
    #[serde(rename = "R")]
    pub r: f64,
}

/// Sorted per-instance median relative errors of each solver in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdTable {
    pub group: String,
    pub scenario: Scenario,
    pub rows: Vec<EcdRow>,
    /// Solvers without a complete record on any instance.
    pub absent: Vec<String>,
}

impl EcdTable {
    pub fn file_name(&self) -> String {
        format!("ecd_{}_{}_{}.csv", self.group, self.scenario.s, self.scenario.t)
    }

    pub fn curve(&self, solver: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.solver == solver).map(|r| r.r).collect()
    }
}

/// Only complete records contribute to a solver's curve.
pub fn ecd_export(data: &Dataset, group: &str, scenario: Scenario) -> Result<EcdTable> {
    let mut curves: Vec<(String, Vec<f64>)> = Vec::new();
    let mut any = false;
    for r in data.slice(group, scenario) {
        any = true;
        let idx = match curves.iter().position(|(s, _)| *s == r.solver) {
            Some(i) => i,
            None => {
                curves.push((r.solver.clone(), Vec::new()));
                curves.len() - 1
            }
        };
        if let (true, Some(RelativeError::Value(v))) = (r.is_complete(), data.record_error(r)) {
            curves[idx].1.push(v);
        }
    }
    if !any {
        return Err(Error::Empty("dataset slice"));
    }
    let mut rows = Vec::new();
    let mut absent = Vec::new();
    for (solver, mut rs) in curves {
        if rs.is_empty() {
            absent.push(solver);
            continue;
        }
        rs.sort_by(f64::total_cmp);
        rows.extend(rs.into_iter().enumerate().map(|(i, r)| EcdRow {
            solver: solver.clone(),
            rank: i + 1,
            r,
        }));
    }
    Ok(EcdTable {
        group: group.to_string(),
        scenario,
        rows,
        absent,
    })
}

/// Verdicts for one (class, scenario) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub group: String,
    pub scenario: Scenario,
    pub winners: Vec<String>,
    pub fails: Vec<String>,
    pub outcomes: Vec<RankOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_target: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilestoneReport {
    pub milestone: u8,
    pub groups: Vec<String>,
    pub scenarios: Vec<Scenario>,
    pub solvers: Vec<String>,
    pub cells: Vec<Cell>,
    /// Classes left out, with the reason.
    pub excluded: Vec<(String, String)>,
    #[serde(skip)]
    data: Dataset,
}

impl MilestoneReport {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    fn count(&self, solver: &str, sc: Scenario, pick: impl Fn(&Cell) -> &Vec<String>) -> usize {
        self.cells
            .iter()
            .filter(|c| c.scenario == sc && pick(c).iter().any(|s| s == solver))
            .count()
    }

    /// Classes in which `solver` wins or shares the win under `sc`.
    pub fn wins(&self, solver: &str, sc: Scenario) -> usize {
        self.count(solver, sc, |c| &c.winners)
    }

    pub fn fails(&self, solver: &str, sc: Scenario) -> usize {
        self.count(solver, sc, |c| &c.fails)
    }

    pub fn total_wins(&self, solver: &str) -> usize {
        self.cells
            .iter()
            .filter(|c| c.winners.iter().any(|s| s == solver))
            .count()
    }

    /// Verdict counts per solver.
    pub fn verdict_counts(&self) -> BTreeMap<String, BTreeMap<Verdict, usize>> {
        let mut out: BTreeMap<String, BTreeMap<Verdict, usize>> = BTreeMap::new();
        for o in self.cells.iter().flat_map(|c| &c.outcomes) {
            *out.entry(o.solver.clone()).or_default().entry(o.verdict).or_default() += 1;
        }
        out
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }
}

/// Ranks every (class, scenario) cell. Milestone 1 reads physical-space
/// records; milestone 2 reads logical-space records of embedded classes.
pub fn milestone_report(data: &Dataset, milestone: u8, eps: Epsilon) -> Result<MilestoneReport> {
    let space = match milestone {
        1 => Space::Physical,
        2 => Space::Logical,
        m => return Err(Error::Param(format!("milestone must be 1 or 2, got {m}"))),
    };
    let mut excluded = Vec::new();
    let mut keep = Vec::new();
    for g in data.groups() {
        let native = data.records().iter().any(|r| r.group == g && r.class.is_native());
        if milestone == 2 && native {
            excluded.push((g, "native class: logical and physical inputs coincide".to_string()));
        } else if !data.records().iter().any(|r| r.group == g && r.space == space) {
            excluded.push((
                g,
                format!("no {} records", if milestone == 1 { "physical" } else { "logical" }),
            ));
        } else {
            keep.push(g);
        }
    }
    let sub = Dataset::new(
        data.records()
            .iter()
            .filter(|r| r.space == space && keep.contains(&r.group))
            .cloned()
            .collect(),
    );
    if sub.is_empty() {
        return Err(Error::Empty("milestone dataset"));
    }
    let scenarios = sub.scenarios();
    let mut cells = Vec::new();
    for g in &keep {
        for &sc in &scenarios {
            if sub.slice(g, sc).next().is_none() {
                continue;
            }
            let r = rank_scenario(&sub, g, sc, eps)?;
            cells.push(Cell {
                group: g.clone(),
                scenario: sc,
                fails: r
                    .outcomes
                    .iter()
                    .filter(|o| o.verdict == Verdict::Fail)
                    .map(|o| o.solver.clone())
                    .collect(),
                winners: r.winners,
                outcomes: r.outcomes,
                zero_target: r.zero_target,
                ambiguous: r.ambiguous,
            });
        }
    }
    Ok(MilestoneReport {
        milestone,
        groups: keep,
        scenarios,
        solvers: sub.solvers(),
        cells,
        excluded,
        data: sub,
    })
}

#[derive(Serialize)]
struct CountRow<'a> {
    solver: &'a str,
    s: usize,
    t: f64,
    count: usize,
    classes: usize,
}

fn write_counts(path: &Path, report: &MilestoneReport, fails: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for solver in &report.solvers {
        for &sc in &report.scenarios {
            let count = if fails {
                report.fails(solver, sc)
            } else {
                report.wins(solver, sc)
            };
            let classes = report.cells.iter().filter(|c| c.scenario == sc).count();
            w.serialize(CountRow {
                solver,
                s: sc.s,
                t: sc.t,
                count,
                classes,
            })
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsentSolvers {
    pub group: String,
    pub scenario: Scenario,
    pub solvers: Vec<String>,
}

/// Contents of `summary_m<k>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub milestone: u8,
    pub cells: usize,
    pub groups: Vec<String>,
    pub scenarios: Vec<Scenario>,
    pub verdicts: BTreeMap<String, BTreeMap<Verdict, usize>>,
    pub wins: BTreeMap<String, usize>,
    pub excluded: Vec<(String, String)>,
    pub ecd_absent: Vec<AbsentSolvers>,
    pub zero_target: Vec<String>,
    pub ambiguous_cells: Vec<(String, Scenario)>,
}

/// Writes ECD tables for every cell, the win and fail count tables and a
/// JSON summary into `out_dir`.
pub fn write_analysis(data: &Dataset, out_dir: &Path, milestone: u8, eps: Epsilon) -> Result<AnalysisSummary> {
    let report = milestone_report(data, milestone, eps)?;
    fs::create_dir_all(out_dir)?;
    let mut ecd_absent = Vec::new();
    for c in &report.cells {
        let table = ecd_export(report.dataset(), &c.group, c.scenario)?;
        write_csv(&out_dir.join(table.file_name()), &table.rows)?;
        if !table.absent.is_empty() {
            ecd_absent.push(AbsentSolvers {
                group: c.group.clone(),
                scenario: c.scenario,
                solvers: table.absent,
            });
        }
    }
    write_counts(&out_dir.join(format!("wins_m{milestone}.csv")), &report, false)?;
    write_counts(&out_dir.join(format!("fails_m{milestone}.csv")), &report, true)?;
    let mut zero_target: Vec<String> = report.cells.iter().flat_map(|c| c.zero_target.clone()).collect();
    zero_target.sort();
    zero_target.dedup();
    let summary = AnalysisSummary {
        milestone,
        cells: report.num_cells(),
        groups: report.groups.clone(),
        scenarios: report.scenarios.clone(),
        verdicts: report.verdict_counts(),
        wins: report
            .solvers
            .iter()
            .map(|s| (s.clone(), report.total_wins(s)))
            .collect(),
        excluded: report.excluded.clone(),
        ecd_absent,
        zero_target,
        ambiguous_cells: report
            .cells
            .iter()
            .filter(|c| c.ambiguous)
            .map(|c| (c.group.clone(), c.scenario))
            .collect(),
    };
    fs::write(
        out_dir.join(format!("summary_m{milestone}.json")),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::record;
    use super::*;
    use crate::harness::{scenario_grid, ScenarioConfig};

    fn paper_shaped(groups: &[&str]) -> Dataset {
        let grid = scenario_grid(&ScenarioConfig::default()).unwrap();
        let mut recs = Vec::new();
        for g in groups {
            for &sc in &grid {
                for i in 0..3 {
                    recs.push(record("qpu", g, i, sc, vec![-10.0; sc.s]));
                    recs.push(record("sa", g, i, sc, vec![-9.0; sc.s]));
                    recs.push(record("random", g, i, sc, vec![]));
                }
            }
        }
        Dataset::new(recs)
    }

    #[test]
    fn grid_shapes() {
        let d = paper_shaped(&M1_CLASS_LABELS);
        let m1 = milestone_report(&d, 1, Epsilon::Auto).unwrap();
        assert_eq!(m1.num_cells(), 247);
        assert_eq!(m1.total_wins("qpu"), 247);
        assert_eq!(m1.total_wins("sa"), 0);
        assert_eq!(m1.fails("random", Scenario::new(1, 0.02)), 13);

        let mut recs = d.records().to_vec();
        for r in recs.iter_mut().filter(|r| M2_CLASS_LABELS.contains(&r.group.as_str())) {
            r.space = Space::Logical;
        }
        let m2 = milestone_report(&Dataset::new(recs), 2, Epsilon::Auto).unwrap();
        assert_eq!(m2.num_cells(), 152);
        assert_eq!(m2.excluded.len(), 5);
        assert!(m2.excluded.iter().all(|(_, why)| why.starts_with("native")));
    }

    #[test]
    fn ecd_rows_and_midpoint() {
        let sc = Scenario::new(1, 0.1);
        let mut recs = Vec::new();
        for i in 0..25 {
            recs.push(record("best", "SK", i, sc, vec![-100.0]));
            recs.push(record("sa", "SK", i, sc, vec![-100.0 + ((i * 7) % 25) as f64]));
            recs.push(record("gone", "SK", i, sc, vec![]));
        }
        let d = Dataset::new(recs);
        let t = ecd_export(&d, "SK", sc).unwrap();
        let curve = t.curve("sa");
        assert_eq!(curve.len(), 25);
        assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        let mut rs: Vec<f64> = (0..25).map(|i| ((i * 7) % 25) as f64 / 100.0).collect();
        rs.sort_by(f64::total_cmp);
        assert_eq!(
            t.rows.iter().find(|r| r.solver == "sa" && r.rank == 13).unwrap().r,
            rs[12]
        );
        assert_eq!(t.absent, vec!["gone"]);
        assert_eq!(t.file_name(), "ecd_SK_1_0.1.csv");
    }

    #[test]
    fn analysis_files() {
        let d = paper_shaped(&["NAT1", "SK"]);
        let dir = tempfile::tempdir().unwrap();
        let s = write_analysis(&d, dir.path(), 1, Epsilon::Auto).unwrap();
        assert_eq!(s.cells, 38);
        assert_eq!(s.wins["qpu"], 38);
        assert_eq!(s.ecd_absent.len(), 38);
        for f in ["wins_m1.csv", "fails_m1.csv", "summary_m1.json", "ecd_NAT1_10_0.5.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let wins = fs::read_to_string(dir.path().join("wins_m1.csv")).unwrap();
        assert!(wins.starts_with("solver,s,t,count,classes\nqpu,1,0.02,2,2\n"));
    }
}
