use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{
    Allocation, Assignment, BaselinePriority, Branch, BranchId, BranchQuota, CadetId, Contract, ContractPreference,
    Cost, Economy, QuasiStrategy, Slot,
};
use crate::policies::{BradsoPolicy, PolicyKind, TierAssignment};

pub const BRANCHES: &str = "branches.csv";
pub const CADETS: &str = "cadets.csv";
pub const PRIORITIES: &str = "priorities.csv";
pub const TIERS: &str = "tiers.csv";
pub const POLICIES: &str = "policies.csv";
pub const CONTRACT_PREFS: &str = "contract_prefs.csv";
pub const STRATEGIES: &str = "strategies.csv";
pub const WILLING: &str = "willing.csv";

pub const UNMATCHED: &str = "UNMATCHED";
/// Cost cell for an unmatched cadet in allocation files.
pub const NO_COST: &str = "-";

/// A CSV file with a fixed header, rows tagged with their 1-based line numbers.
pub(crate) struct Table {
    pub path: PathBuf,
    pub rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    pub fn parse(path: &Path, text: &str, header: &[&str]) -> Result<Table> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let schema = |line: u64, column: Option<u64>, message: String| Error::Schema {
            path: path.to_path_buf(),
            line,
            column,
            message,
        };
        let got = r.headers().map_err(|e| schema(1, None, e.to_string()))?.clone();
        let got: Vec<&str> = got.iter().map(|h| h.trim_start_matches('\u{feff}')).collect();
        if got != header {
            return Err(schema(1, None, format!("expected header `{}`, found `{}`", header.join(","), got.join(","))));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                schema(line, None, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.iter().all(str::is_empty) {
                continue;
            }
            rows.push((line, rec.iter().map(str::to_string).collect()));
        }
        Ok(Table {
            path: path.to_path_buf(),
            rows,
        })
    }

    pub fn err(&self, line: u64, column: usize, message: impl Into<String>) -> Error {
        Error::Schema {
            path: self.path.clone(),
            line,
            column: Some(column as u64 + 1),
            message: message.into(),
        }
    }

    pub fn usize(&self, line: u64, row: &[String], column: usize, what: &str) -> Result<usize> {
        row[column]
            .parse()
            .map_err(|_| self.err(line, column, format!("{what} `{}` is not a nonnegative integer", row[column])))
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_table(dir: &Path, file: &str, header: &[&str]) -> Result<Option<Table>> {
    let path = dir.join(file);
    if !path.exists() {
        return Ok(None);
    }
    Table::parse(&path, &read_text(&path)?, header).map(Some)
}

fn require(dir: &Path, file: &str, header: &[&str]) -> Result<Table> {
    read_table(dir, file, header)?.ok_or_else(|| Error::io(dir.join(file), std::io::ErrorKind::NotFound.into()))
}

fn parse_cost(t: &Table, line: u64, row: &[String], column: usize) -> Result<Cost> {
    match row[column].as_str() {
        "BASE" => Ok(Cost::Base),
        "BRADSO" => Ok(Cost::Increased),
        other => Err(t.err(line, column, format!("cost `{other}` is not BASE or BRADSO"))),
    }
}

fn cadet(t: &Table, econ: &Economy, line: u64, row: &[String], column: usize) -> Result<CadetId> {
    econ.cadet_id(&row[column])
        .map_err(|_| t.err(line, column, format!("unknown cadet `{}`", row[column])))
}

fn branch(t: &Table, econ: &Economy, line: u64, row: &[String], column: usize) -> Result<BranchId> {
    econ.branch_id(&row[column])
        .map_err(|_| t.err(line, column, format!("unknown branch `{}`", row[column])))
}

/// Read and validate the economy files in `dir`.
///
/// `branches.csv` and `cadets.csv` are required. Without `priorities.csv`
/// every branch ranks cadets by the OML. `tiers.csv` attaches tier ratings;
/// `policies.csv` (branch_id,policy) picks a policy per branch, default ultimate.
pub fn parse_economy(dir: &Path) -> Result<Economy> {
    let bt = require(dir, BRANCHES, &["branch_id", "total", "bradso_cap"])?;
    let mut branches = Vec::new();
    let mut seen = HashMap::new();
    for (line, row) in &bt.rows {
        if let Some(first) = seen.insert(row[0].clone(), *line) {
            return Err(bt.err(*line, 0, format!("duplicate branch `{}` (first on line {first})", row[0])));
        }
        let total = bt.usize(*line, row, 1, "total")?;
        let cap = bt.usize(*line, row, 2, "bradso_cap")?;
        let quota = BranchQuota::new(total, cap).map_err(|e| bt.err(*line, 2, e.to_string()))?;
        branches.push(Branch {
            name: row[0].clone(),
            quota,
        });
    }
    if branches.is_empty() {
        return Err(bt.err(2, 0, "no branches"));
    }

    let ct = require(dir, CADETS, &["cadet_id", "oml_rank"])?;
    let mut by_rank: BTreeMap<usize, (u64, String)> = BTreeMap::new();
    let mut names = HashMap::new();
    for (line, row) in &ct.rows {
        if let Some(first) = names.insert(row[0].clone(), *line) {
            return Err(ct.err(*line, 0, format!("duplicate cadet `{}` (first on line {first})", row[0])));
        }
        let rank = ct.usize(*line, row, 1, "oml_rank")?;
        if let Some((other, _)) = by_rank.insert(rank, (*line, row[0].clone())) {
            return Err(ct.err(*line, 1, format!("oml_rank {rank} already used on line {other}")));
        }
    }
    if by_rank.is_empty() {
        return Err(ct.err(2, 0, "no cadets"));
    }
    let cadet_names: Vec<String> = by_rank.into_values().map(|(_, n)| n).collect();
    let index: HashMap<&str, CadetId> = cadet_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), CadetId(i as u32)))
        .collect();
    let branch_index: HashMap<&str, BranchId> = branches
        .iter()
        .enumerate()
        .map(|(b, br)| (br.name.as_str(), BranchId(b as u32)))
        .collect();
    let n = cadet_names.len();
    let m = branches.len();
    let lookup = |t: &Table, line: u64, row: &[String]| -> Result<(BranchId, CadetId)> {
        let b = *branch_index
            .get(row[0].as_str())
            .ok_or_else(|| t.err(line, 0, format!("unknown branch `{}`", row[0])))?;
        let c = *index
            .get(row[1].as_str())
            .ok_or_else(|| t.err(line, 1, format!("unknown cadet `{}`", row[1])))?;
        Ok((b, c))
    };

    let priorities = match read_table(dir, PRIORITIES, &["branch_id", "cadet_id", "rank"])? {
        None => vec![BaselinePriority::identity(n); m],
        Some(pt) => {
            let mut ranks: Vec<BTreeMap<usize, CadetId>> = vec![BTreeMap::new(); m];
            let mut listed: Vec<BTreeSet<CadetId>> = vec![BTreeSet::new(); m];
            for (line, row) in &pt.rows {
                let (b, c) = lookup(&pt, *line, row)?;
                let r = pt.usize(*line, row, 2, "rank")?;
                if !listed[b.index()].insert(c) {
                    return Err(pt.err(*line, 1, format!("cadet `{}` ranked twice at `{}`", row[1], row[0])));
                }
                if ranks[b.index()].insert(r, c).is_some() {
                    return Err(pt.err(*line, 2, format!("rank {r} used twice at `{}`", row[0])));
                }
            }
            ranks
                .into_iter()
                .enumerate()
                .map(|(b, r)| {
                    if r.is_empty() {
                        return Ok(BaselinePriority::identity(n));
                    }
                    if r.len() != n {
                        return Err(Error::invariant(
                            "priority covers every cadet",
                            format!("{PRIORITIES}: branch `{}` ranks {} of {n} cadets", branches[b].name, r.len()),
                        ));
                    }
                    BaselinePriority::from_ranking(r.into_values().collect())
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let tiers = match read_table(dir, TIERS, &["branch_id", "cadet_id", "tier"])? {
        None => None,
        Some(tt) => {
            let mut raw: Vec<Vec<Option<usize>>> = vec![vec![None; n]; m];
            for (line, row) in &tt.rows {
                let (b, c) = lookup(&tt, *line, row)?;
                let t = tt.usize(*line, row, 2, "tier")?;
                if t == 0 || t > 255 {
                    return Err(tt.err(*line, 2, "tier must be between 1 and 255"));
                }
                if raw[b.index()][c.index()].replace(t - 1).is_some() {
                    return Err(tt.err(*line, 1, format!("cadet `{}` rated twice at `{}`", row[1], row[0])));
                }
            }
            let mut out = Vec::with_capacity(m);
            for (b, v) in raw.into_iter().enumerate() {
                let bid = BranchId(b as u32);
                if v.iter().all(Option::is_none) {
                    out.push(TierAssignment::single(bid, n));
                    continue;
                }
                let Some(missing) = v.iter().position(Option::is_none) else {
                    let v: Vec<u8> = v.into_iter().map(|t| t.unwrap() as u8).collect();
                    let k = v.iter().max().map_or(1, |t| t + 1);
                    out.push(TierAssignment::new(bid, v, k)?);
                    continue;
                };
                return Err(Error::invariant(
                    "tiers cover every cadet",
                    format!("{TIERS}: branch `{}` has no tier for `{}`", branches[b].name, cadet_names[missing]),
                ));
            }
            Some(out)
        }
    };

    let mut kinds = vec![PolicyKind::Ultimate; m];
    if let Some(pt) = read_table(dir, POLICIES, &["branch_id", "policy"])? {
        for (line, row) in &pt.rows {
            let b = *branch_index
                .get(row[0].as_str())
                .ok_or_else(|| pt.err(*line, 0, format!("unknown branch `{}`", row[0])))?;
            kinds[b.index()] = row[1].parse().map_err(|e: Error| pt.err(*line, 1, e.to_string()))?;
        }
    }
    let policies = (0..m)
        .map(|b| {
            let bid = BranchId(b as u32);
            BradsoPolicy::build(kinds[b], bid, &priorities[b], tiers.as_ref().map(|t| &t[b]))
        })
        .collect::<Result<Vec<_>>>()?;
    let econ = Economy::new(cadet_names, branches, priorities, policies)?;
    match tiers {
        Some(t) => econ.with_tiers(t),
        None => Ok(econ),
    }
}

/// `contract_prefs.csv`: rows above a cadet's `UNMATCHED` row are acceptable,
/// rows below it unacceptable. Cadets without rows find nothing acceptable.
pub fn parse_contract_prefs(path: &Path, econ: &Economy) -> Result<Vec<ContractPreference>> {
    let t = Table::parse(path, &read_text(path)?, &["cadet_id", "rank", "branch_id", "cost"])?;
    let mut lists: Vec<BTreeMap<usize, (u64, Option<Slot>)>> = vec![BTreeMap::new(); econ.num_cadets()];
    for (line, row) in &t.rows {
        let c = cadet(&t, econ, *line, row, 0)?;
        let r = t.usize(*line, row, 1, "rank")?;
        let slot = if row[3] == UNMATCHED {
            None
        } else {
            Some((branch(&t, econ, *line, row, 2)?, parse_cost(&t, *line, row, 3)?))
        };
        if let Some((other, _)) = lists[c.index()].insert(r, (*line, slot)) {
            return Err(t.err(*line, 1, format!("rank {r} of `{}` already used on line {other}", row[0])));
        }
    }
    lists
        .into_iter()
        .enumerate()
        .map(|(i, list)| {
            let (mut acc, mut unacc) = (Vec::new(), Vec::new());
            let mut cut = false;
            let mut first_line = 0;
            for (_, (line, slot)) in list {
                first_line = if first_line == 0 { line } else { first_line };
                match slot {
                    None if cut => return Err(t.err(line, 3, "second UNMATCHED row")),
                    None => cut = true,
                    Some(s) if cut => unacc.push(s),
                    Some(s) => acc.push(s),
                }
            }
            if !cut && !acc.is_empty() {
                return Err(t.err(first_line, 3, format!("cadet `{}` has no UNMATCHED row", econ.cadet_name(CadetId(i as u32)))));
            }
            ContractPreference::new(acc, unacc).map_err(|e| Error::Preference {
                cadet: econ.cadet_name(CadetId(i as u32)).to_string(),
                detail: e.to_string(),
            })
        })
        .collect()
}

/// `strategies.csv` (cadet_id,rank,branch_id) plus optional `willing.csv` (cadet_id,branch_id).
pub fn parse_strategies(strategies: &Path, willing: Option<&Path>, econ: &Economy) -> Result<Vec<QuasiStrategy>> {
    let t = Table::parse(strategies, &read_text(strategies)?, &["cadet_id", "rank", "branch_id"])?;
    let mut orders: Vec<BTreeMap<usize, (u64, BranchId)>> = vec![BTreeMap::new(); econ.num_cadets()];
    for (line, row) in &t.rows {
        let c = cadet(&t, econ, *line, row, 0)?;
        let r = t.usize(*line, row, 1, "rank")?;
        let b = branch(&t, econ, *line, row, 2)?;
        if let Some((other, _)) = orders[c.index()].insert(r, (*line, b)) {
            return Err(t.err(*line, 1, format!("rank {r} of `{}` already used on line {other}", row[0])));
        }
    }
    let mut sets: Vec<BTreeSet<BranchId>> = vec![BTreeSet::new(); econ.num_cadets()];
    if let Some(w) = willing {
        let wt = Table::parse(w, &read_text(w)?, &["cadet_id", "branch_id"])?;
        for (line, row) in &wt.rows {
            let c = cadet(&wt, econ, *line, row, 0)?;
            let b = branch(&wt, econ, *line, row, 1)?;
            if !sets[c.index()].insert(b) {
                return Err(wt.err(*line, 1, format!("`{}` willing at `{}` twice", row[0], row[1])));
            }
        }
    }
    orders
        .into_iter()
        .zip(sets)
        .map(|(o, s)| {
            let lines: Vec<u64> = o.values().map(|x| x.0).collect();
            QuasiStrategy::new(o.into_values().map(|x| x.1).collect(), s)
                .map_err(|e| t.err(lines.last().copied().unwrap_or(0), 2, e.to_string()))
        })
        .collect()
}

/// Allocation files: cadet_id,branch_id,cost with `UNMATCHED` and `-` for unassigned cadets.
pub fn parse_allocation(path: &Path, econ: &Economy) -> Result<Allocation> {
    let t = Table::parse(path, &read_text(path)?, &["cadet_id", "branch_id", "cost"])?;
    let mut seen = BTreeSet::new();
    let mut contracts = Vec::new();
    for (line, row) in &t.rows {
        let c = cadet(&t, econ, *line, row, 0)?;
        if !seen.insert(c) {
            return Err(t.err(*line, 0, format!("cadet `{}` listed twice", row[0])));
        }
        if row[1] == UNMATCHED {
            if !matches!(row[2].as_str(), NO_COST | "\u{2013}" | "") {
                return Err(t.err(*line, 2, "unmatched cadet with a cost"));
            }
            continue;
        }
        contracts.push(Contract::new(c, branch(&t, econ, *line, row, 1)?, parse_cost(&t, *line, row, 2)?));
    }
    Ok(Allocation::new(contracts))
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

fn record<I, T>(w: &mut csv::Writer<Vec<u8>>, fields: I)
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(fields).expect("in-memory writer");
}

/// One row per cadet, in cadet order.
pub fn allocation_csv(econ: &Economy, alloc: &Allocation) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    record(&mut w, ["cadet_id", "branch_id", "cost"]);
    for (i, a) in alloc.assignments(econ.num_cadets()).iter().enumerate() {
        let name = econ.cadet_name(CadetId(i as u32));
        match a {
            Assignment::Unmatched => record(&mut w, [name, UNMATCHED, NO_COST]),
            Assignment::Matched(b, t) => record(&mut w, [name, econ.branch_name(*b), t.as_token()]),
        }
    }
    finish(w)
}

/// The economy files, keyed by file name.
pub fn economy_csvs(econ: &Economy) -> BTreeMap<&'static str, String> {
    let mut out = BTreeMap::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    record(&mut w, ["branch_id", "total", "bradso_cap"]);
    for br in econ.branches() {
        record(&mut w, [br.name.clone(), br.quota.total().to_string(), br.quota.bradso_cap().to_string()]);
    }
    out.insert(BRANCHES, finish(w));

    let mut w = csv::Writer::from_writer(Vec::new());
    record(&mut w, ["cadet_id", "oml_rank"]);
    for c in econ.cadets() {
        record(&mut w, [econ.cadet_name(c).to_string(), (c.index() + 1).to_string()]);
    }
    out.insert(CADETS, finish(w));

    let mut w = csv::Writer::from_writer(Vec::new());
    record(&mut w, ["branch_id", "cadet_id", "rank"]);
    for b in econ.branch_ids() {
        for (r, c) in econ.priority(b).ranking().iter().enumerate() {
            record(&mut w, [econ.branch_name(b), econ.cadet_name(*c), &(r + 1).to_string()]);
        }
    }
    out.insert(PRIORITIES, finish(w));

    if let Some(tiers) = econ.tiers() {
        let mut w = csv::Writer::from_writer(Vec::new());
        record(&mut w, ["branch_id", "cadet_id", "tier"]);
        for b in econ.branch_ids() {
            for c in econ.priority(b).ranking() {
                let t = tiers[b.index()].tier(*c) + 1;
                record(&mut w, [econ.branch_name(b), econ.cadet_name(*c), &t.to_string()]);
            }
        }
        out.insert(TIERS, finish(w));
    }
    out
}

/// `policies.csv` naming one policy kind per branch.
pub fn policies_csv(econ: &Economy, kinds: &[PolicyKind]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    record(&mut w, ["branch_id", "policy"]);
    for (b, k) in econ.branch_ids().zip(kinds) {
        record(&mut w, [econ.branch_name(b), k.as_str()]);
    }
    finish(w)
}

pub fn contract_prefs_csv(econ: &Economy, prefs: &[ContractPreference]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    record(&mut w, ["cadet_id", "rank", "branch_id", "cost"]);
    for (i, p) in prefs.iter().enumerate() {
        let name = econ.cadet_name(CadetId(i as u32));
        let mut r = 0;
        let mut row = |w: &mut csv::Writer<Vec<u8>>, b: &str, t: &str| {
            r += 1;
            record(w, [name, &r.to_string(), b, t]);
        };
        for (b, t) in p.acceptable() {
            row(&mut w, econ.branch_name(*b), t.as_token());
        }
        row(&mut w, "", UNMATCHED);
        for (b, t) in p.unacceptable() {
            row(&mut w, econ.branch_name(*b), t.as_token());
        }
    }
    finish(w)
}

/// `strategies.csv` and `willing.csv`.
pub fn strategies_csvs(econ: &Economy, strategies: &[QuasiStrategy]) -> (String, String) {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut v = csv::Writer::from_writer(Vec::new());
    record(&mut w, ["cadet_id", "rank", "branch_id"]);
    record(&mut v, ["cadet_id", "branch_id"]);
    for (i, s) in strategies.iter().enumerate() {
        let name = econ.cadet_name(CadetId(i as u32));
        for (r, b) in s.branch_order().iter().enumerate() {
            record(&mut w, [name, &(r + 1).to_string(), econ.branch_name(*b)]);
        }
        for b in s.bradso_set() {
            record(&mut v, [name, econ.branch_name(*b)]);
        }
    }
    (finish(w), finish(v))
}
