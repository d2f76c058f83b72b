//! Loading and cleaning of the COVID tracking CSV files and the
//! state-to-state mobility flow CSV files.
//!
//! Cleaning rules applied by [`load_covid_csv`]:
//!
//! * rows before the level's start date are dropped, so the national series
//!   begins on 2020-02-26 and state series on 2020-03-29;
//! * negative daily counts (data revisions) are clamped to zero with a warning;
//! * missing exogenous values are forward-filled, and leading gaps are
//!   back-filled from the first observed value;
//! * at state level only the 50 states and DC are kept.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use log::warn;

use crate::series::TimeSeries;
use crate::{Error, Result, EXOGENOUS_COLUMNS, TARGET_COLUMN};

/// The 50 states plus the District of Columbia.
pub const STATE_CODES: [&str; 51] = [
    "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DC", "DE", "FL", "GA", "HI", "IA", "ID", "IL", "IN", "KS", "KY", "LA",
    "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ", "NM", "NV", "NY", "OH", "OK", "OR",
    "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA", "WI", "WV", "WY",
];

pub const NATIONAL_CODE: &str = "US";

/// A region code: a state abbreviation or `US`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Region(String);

impl Region {
    /// Parses a code, accepting only the national code and [`STATE_CODES`].
    pub fn parse(code: &str) -> Option<Self> {
        let code = code.trim().to_ascii_uppercase();
        (code == NATIONAL_CODE || STATE_CODES.contains(&code.as_str())).then_some(Region(code))
    }

    pub fn national() -> Self {
        Region(NATIONAL_CODE.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn all_states() -> Vec<Region> {
        STATE_CODES.iter().map(|c| Region(c.to_string())).collect()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    National,
    State,
}

impl Level {
    /// First day kept after trimming the leading period with missing values.
    pub fn start_date(self) -> NaiveDate {
        match self {
            Level::National => NaiveDate::from_ymd_opt(2020, 2, 26).unwrap(),
            Level::State => NaiveDate::from_ymd_opt(2020, 3, 29).unwrap(),
        }
    }

    /// Length of the cleaned published dataset.
    pub fn expected_length(self) -> usize {
        match self {
            Level::National => 376,
            Level::State => 297,
        }
    }

    /// Days in the initial training split of the published dataset.
    pub fn initial_train(self) -> usize {
        match self {
            Level::National => 236,
            Level::State => 185,
        }
    }
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "national" => Ok(Level::National),
            "state" => Ok(Level::State),
            other => Err(Error::Config(format!("unknown level `{other}`"))),
        }
    }
}

/// One parsed row of a COVID CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCovidRow {
    pub date: NaiveDate,
    pub region: Region,
    pub death_increase: Option<f64>,
    /// Values for the exogenous columns present in the file, in header order.
    pub exogenous: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
struct RegionColumns {
    target: Vec<f64>,
    exogenous: Vec<Vec<f64>>,
}

/// Per-region target and exogenous series on one contiguous daily calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    start: NaiveDate,
    len: usize,
    regions: Vec<Region>,
    exog_names: Vec<String>,
    data: Vec<RegionColumns>,
}

impl PanelDataset {
    /// Assembles a dataset; regions are reordered lexicographically.
    ///
    /// `columns` maps each region to its target and its exogenous columns in `exog_names` order.
    pub fn new(
        start: NaiveDate,
        exog_names: Vec<String>,
        columns: BTreeMap<Region, (Vec<f64>, Vec<Vec<f64>>)>,
    ) -> Result<Self> {
        let len = columns
            .values()
            .next()
            .map(|(t, _)| t.len())
            .ok_or_else(|| Error::Data("dataset has no regions".into()))?;
        if len == 0 {
            return Err(Error::Data("dataset has an empty calendar".into()));
        }
        let mut regions = Vec::new();
        let mut data = Vec::new();
        for (region, (target, exogenous)) in columns {
            if target.len() != len || exogenous.len() != exog_names.len() || exogenous.iter().any(|c| c.len() != len) {
                return Err(Error::Data(format!(
                    "series for {region} are not aligned to the calendar"
                )));
            }
            if target.iter().chain(exogenous.iter().flatten()).any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("non-finite value for {region}")));
            }
            regions.push(region);
            data.push(RegionColumns { target, exogenous });
        }
        Ok(Self {
            start,
            len,
            regions,
            exog_names,
            data,
        })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn exog_names(&self) -> &[String] {
        &self.exog_names
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.len).map(move |i| self.start + Duration::days(i as i64))
    }

    fn region_index(&self, region: &Region) -> Result<usize> {
        self.regions
            .binary_search(region)
            .map_err(|_| Error::Input(format!("region {region} not in dataset")))
    }

    pub fn target(&self, region: &Region) -> Result<TimeSeries> {
        let i = self.region_index(region)?;
        TimeSeries::new(self.start, self.data[i].target.clone())
    }

    pub fn target_values(&self, region: &Region) -> Result<&[f64]> {
        Ok(&self.data[self.region_index(region)?].target)
    }

    pub fn exog(&self, region: &Region, name: &str) -> Result<&[f64]> {
        let i = self.region_index(region)?;
        let j = self
            .exog_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Schema(format!("exogenous column `{name}` not in dataset")))?;
        Ok(&self.data[i].exogenous[j])
    }

    /// Selected exogenous columns for one region, in the requested order.
    pub fn exog_columns(&self, region: &Region, names: &[String]) -> Result<Vec<Vec<f64>>> {
        names
            .iter()
            .map(|n| self.exog(region, n).map(<[f64]>::to_vec))
            .collect()
    }

    /// Days `[start, end)` of every series.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len {
            return Err(Error::Length(format!(
                "slice {start}..{end} of a {}-day dataset",
                self.len
            )));
        }
        Ok(Self {
            start: self.start + Duration::days(start as i64),
            len: end - start,
            regions: self.regions.clone(),
            exog_names: self.exog_names.clone(),
            data: self
                .data
                .iter()
                .map(|c| RegionColumns {
                    target: c.target[start..end].to_vec(),
                    exogenous: c.exogenous.iter().map(|x| x[start..end].to_vec()).collect(),
                })
                .collect(),
        })
    }

    /// Keeps only `regions` (all must be present).
    pub fn select_regions(&self, regions: &[Region]) -> Result<Self> {
        let mut columns = BTreeMap::new();
        for r in regions {
            let i = self.region_index(r)?;
            columns.insert(r.clone(), (self.data[i].target.clone(), self.data[i].exogenous.clone()));
        }
        Self::new(self.start, self.exog_names.clone(), columns)
    }

    /// Sum of the target over all regions, e.g. states to a national series.
    pub fn summed_target(&self) -> Result<TimeSeries> {
        let mut total = vec![0.0; self.len];
        for c in &self.data {
            total.iter_mut().zip(&c.target).for_each(|(t, v)| *t += v);
        }
        TimeSeries::new(self.start, total)
    }

    /// Writes the dataset in the loader's CSV layout (ISO dates, one row per date and region).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let mut header = vec!["date".to_string(), "state".to_string(), TARGET_COLUMN.to_string()];
        header.extend(self.exog_names.iter().cloned());
        w.write_record(&header)?;
        for (t, date) in self.dates().enumerate() {
            for (region, c) in self.regions.iter().zip(&self.data) {
                let mut row = vec![
                    date.format("%Y-%m-%d").to_string(),
                    region.to_string(),
                    c.target[t].to_string(),
                ];
                row.extend(c.exogenous.iter().map(|x| x[t].to_string()));
                w.write_record(&row)?;
            }
        }
        w.into_inner()
            .map_err(|e| Error::io(path, e.into_error()))?
            .flush()
            .map_err(|e| Error::io(path, e))
    }
}

/// Parses `YYYY-MM-DD` or `YYYYMMDD`.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y%m%d"))
        .ok()
}

fn parse_count(raw: &str, what: &str, line: u64) -> Result<Option<f64>> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("null") {
        return Ok(None);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::Data(format!("line {line}: `{raw}` is not a number in column {what}")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!("line {line}: non-finite {what}")));
    }
    Ok(Some(v))
}

/// Options for [`load_covid_csv_with`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub level: Level,
    /// Overrides the level's default start date.
    pub start: Option<NaiveDate>,
}

/// Loads and cleans a national or state COVID file with the default trimming rule.
pub fn load_covid_csv(path: impl AsRef<Path>, level: Level) -> Result<PanelDataset> {
    load_covid_csv_with(path, &LoadOptions { level, start: None })
}

pub fn load_covid_csv_with(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<PanelDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let rows = read_covid_rows(file, opts.level)?;
    clean_rows(rows.0, rows.1, opts)
}

fn read_covid_rows<R: std::io::Read>(reader: R, level: Level) -> Result<(Vec<RawCovidRow>, Vec<String>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let date_col = find("date").ok_or_else(|| Error::Schema("missing `date` column".into()))?;
    let target_col = find(TARGET_COLUMN).ok_or_else(|| Error::Schema(format!("missing `{TARGET_COLUMN}` column")))?;
    let region_col = find("state").or_else(|| find("region"));
    let exog: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| EXOGENOUS_COLUMNS.contains(h))
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut rows = Vec::new();
    let mut skipped = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let date_raw = rec.get(date_col).unwrap_or("");
        let date =
            parse_date(date_raw).ok_or_else(|| Error::Data(format!("line {line}: unparseable date `{date_raw}`")))?;
        let code = region_col.and_then(|c| rec.get(c)).unwrap_or(NATIONAL_CODE);
        let region = match (Region::parse(code), level) {
            (Some(r), Level::State) if r.as_str() != NATIONAL_CODE => r,
            (Some(r), Level::National) if r.as_str() == NATIONAL_CODE => r,
            _ => {
                skipped.insert(code.to_string());
                continue;
            }
        };
        let death_increase = parse_count(rec.get(target_col).unwrap_or(""), TARGET_COLUMN, line)?;
        let exogenous = exog
            .iter()
            .map(|(i, name)| parse_count(rec.get(*i).unwrap_or(""), name, line))
            .collect::<Result<_>>()?;
        rows.push(RawCovidRow {
            date,
            region,
            death_increase,
            exogenous,
        });
    }
    if !skipped.is_empty() {
        warn!("skipped rows for regions outside the {level:?} universe: {skipped:?}");
    }
    Ok((rows, exog.into_iter().map(|(_, n)| n).collect()))
}

fn impute(column: &mut [Option<f64>]) -> Option<Vec<f64>> {
    let first = column.iter().flatten().next().copied()?;
    let mut last = first;
    Some(
        column
            .iter()
            .map(|v| {
                if let Some(x) = v {
                    last = *x;
                }
                last
            })
            .collect(),
    )
}

fn clean_rows(rows: Vec<RawCovidRow>, exog_names: Vec<String>, opts: &LoadOptions) -> Result<PanelDataset> {
    let start = opts.start.unwrap_or_else(|| opts.level.start_date());
    let mut by_region: BTreeMap<Region, BTreeMap<NaiveDate, RawCovidRow>> = BTreeMap::new();
    for row in rows {
        if row.date < start {
            continue;
        }
        let entry = by_region.entry(row.region.clone()).or_default();
        if entry.contains_key(&row.date) {
            return Err(Error::Data(format!("duplicate row for {} on {}", row.region, row.date)));
        }
        entry.insert(row.date, row);
    }
    if by_region.is_empty() {
        return Err(Error::Data(format!("no rows on or after {start}")));
    }
    let end = by_region
        .values()
        .filter_map(|m| m.keys().next_back())
        .max()
        .copied()
        .unwrap();
    let len = (end - start).num_days() as usize + 1;

    let mut columns = BTreeMap::new();
    for (region, days) in by_region {
        let mut expected = start;
        for date in days.keys() {
            if *date != expected {
                return Err(Error::Data(format!("{region}: missing data for {expected}")));
            }
            expected += Duration::days(1);
        }
        if days.len() != len {
            return Err(Error::Data(format!("{region}: series ends before {end}")));
        }
        let mut target = Vec::with_capacity(len);
        let mut exog: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(len); exog_names.len()];
        for (date, row) in &days {
            let v = row
                .death_increase
                .ok_or_else(|| Error::Data(format!("{region}: missing {TARGET_COLUMN} on {date}")))?;
            if v < 0.0 {
                warn!("{region} {date}: negative {TARGET_COLUMN} {v} clamped to 0");
            }
            target.push(v.max(0.0));
            for (j, x) in row.exogenous.iter().enumerate() {
                if let Some(x) = x.filter(|x| *x < 0.0) {
                    warn!("{region} {date}: negative {} {x} clamped to 0", exog_names[j]);
                }
                exog[j].push(x.map(|x| x.max(0.0)));
            }
        }
        let exogenous = exog
            .iter_mut()
            .zip(&exog_names)
            .map(|(col, name)| {
                impute(col).unwrap_or_else(|| {
                    warn!("{region}: column {name} has no observations; filled with zeros");
                    vec![0.0; len]
                })
            })
            .collect();
        columns.insert(region, (target, exogenous));
    }
    PanelDataset::new(start, exog_names, columns)
}

/// Splits into the published initial training window and the remaining test days.
pub fn train_test_split(ds: &PanelDataset, level: Level) -> Result<(PanelDataset, PanelDataset)> {
    if ds.len() != level.expected_length() {
        return Err(Error::Config(format!(
            "{level:?} split expects {} days, dataset has {}; use split_percent for other ranges",
            level.expected_length(),
            ds.len()
        )));
    }
    let k = level.initial_train();
    Ok((ds.slice(0, k)?, ds.slice(k, ds.len())?))
}

/// Training window of the leading `percent`% of days (rounded down).
pub fn split_percent(ds: &PanelDataset, percent: usize) -> Result<(PanelDataset, PanelDataset)> {
    let k = ds.len() * percent / 100;
    if k == 0 || k >= ds.len() {
        return Err(Error::Config(format!(
            "{percent}% split of {} days leaves an empty side",
            ds.len()
        )));
    }
    Ok((ds.slice(0, k)?, ds.slice(k, ds.len())?))
}

/// One origin-destination flow observation.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub origin: Region,
    pub destination: Region,
    pub date: NaiveDate,
    pub visitor_flows: f64,
    pub pop_flows: f64,
}

/// Parsed flow file and the number of rows dropped for unknown region codes.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowLoad {
    pub records: Vec<FlowRecord>,
    pub dropped: usize,
}

/// Reads `origin,destination,date,visitor_flows,pop_flows`.
pub fn load_flows_csv(path: impl AsRef<Path>) -> Result<FlowLoad> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_flows(file)
}

pub fn read_flows<R: std::io::Read>(reader: R) -> Result<FlowLoad> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("flow file missing `{name}` column")))
    };
    let (o, d, t, v, p) = (
        col("origin")?,
        col("destination")?,
        col("date")?,
        col("visitor_flows")?,
        col("pop_flows")?,
    );
    let mut records = Vec::new();
    let mut dropped = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let flow = |i: usize, name: &str| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            let x: f64 = raw
                .parse()
                .map_err(|_| Error::Data(format!("line {line}: `{raw}` is not a number in {name}")))?;
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::Data(format!(
                    "line {line}: {name} must be a non-negative number, got {raw}"
                )));
            }
            Ok(x)
        };
        let visitor_flows = flow(v, "visitor_flows")?;
        let pop_flows = flow(p, "pop_flows")?;
        let date_raw = rec.get(t).unwrap_or("");
        let date =
            parse_date(date_raw).ok_or_else(|| Error::Data(format!("line {line}: unparseable date `{date_raw}`")))?;
        let origin = Region::parse(rec.get(o).unwrap_or("")).filter(|r| r.as_str() != NATIONAL_CODE);
        let destination = Region::parse(rec.get(d).unwrap_or("")).filter(|r| r.as_str() != NATIONAL_CODE);
        match (origin, destination) {
            (Some(origin), Some(destination)) => records.push(FlowRecord {
                origin,
                destination,
                date,
                visitor_flows,
                pop_flows,
            }),
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        warn!("dropped {dropped} flow rows with unknown region codes");
    }
    Ok(FlowLoad { records, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn national_file(first: NaiveDate, last: NaiveDate) -> String {
        let mut s = String::from("date,deathIncrease,hospitalizedCurrently,inIcuCurrently\n");
        let mut d = first;
        let mut i = 0;
        while d <= last {
            // Early rows lack hospitalization data, as in the published file.
            let hosp = if i < 50 { String::new() } else { format!("{}", 100 + i) };
            s.push_str(&format!("{},{},{},{}\n", d.format("%Y%m%d"), i % 13, hosp, hosp));
            d += Duration::days(1);
            i += 1;
        }
        s
    }

    #[test]
    fn national_window_is_376_days() {
        let f = write(&national_file(
            NaiveDate::from_ymd_opt(2020, 1, 13).unwrap(),
            NaiveDate::from_ymd_opt(2021, 3, 7).unwrap(),
        ));
        let ds = load_covid_csv(f.path(), Level::National).unwrap();
        assert_eq!(ds.len(), 376);
        assert_eq!(ds.start_date(), NaiveDate::from_ymd_opt(2020, 2, 26).unwrap());
        assert_eq!(ds.regions(), &[Region::national()]);
        // 2020-02-26 is day 44; hospitalization starts at day 50, so the lead is back-filled.
        let hosp = ds.exog(&Region::national(), "hospitalizedCurrently").unwrap();
        assert_eq!(&hosp[..7], &[150.0; 7]);
        assert_eq!(hosp[6], 150.0);
        assert_eq!(hosp[7], 151.0);
        let (train, test) = train_test_split(&ds, Level::National).unwrap();
        assert_eq!((train.len(), test.len()), (236, 140));
    }

    #[test]
    fn state_window_is_297_days() {
        let mut s = String::from("date,state,deathIncrease,inIcuCurrently\n");
        let mut d = NaiveDate::from_ymd_opt(2020, 1, 19).unwrap();
        let last = NaiveDate::from_ymd_opt(2021, 1, 19).unwrap();
        while d <= last {
            for st in ["GA", "CA", "PR"] {
                s.push_str(&format!("{},{st},1,\n", d.format("%Y%m%d")));
            }
            d += Duration::days(1);
        }
        let ds = load_covid_csv(write(&s).path(), Level::State).unwrap();
        assert_eq!(ds.len(), 297);
        // Territories dropped, regions sorted.
        assert_eq!(
            ds.regions().iter().map(Region::as_str).collect::<Vec<_>>(),
            ["CA", "GA"]
        );
        // A column with no observations is zero-filled.
        assert!(ds
            .exog(&Region::parse("CA").unwrap(), "inIcuCurrently")
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
        let (train, test) = train_test_split(&ds, Level::State).unwrap();
        assert_eq!((train.len(), test.len()), (185, 112));
    }

    #[test]
    fn duplicate_date_is_named() {
        let f = write("date,deathIncrease\n2020-03-01,1\n2020-03-02,2\n2020-03-02,3\n");
        let err = load_covid_csv(f.path(), Level::National).unwrap_err();
        assert!(matches!(&err, Error::Data(m) if m.contains("2020-03-02")), "{err}");
    }

    #[test]
    fn missing_target_column_is_schema_error() {
        let f = write("date,deaths\n2020-03-01,1\n");
        assert!(matches!(
            load_covid_csv(f.path(), Level::National),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn gap_and_negative_revision() {
        let f = write("date,deathIncrease\n2020-02-26,1\n2020-02-28,2\n");
        assert!(matches!(load_covid_csv(f.path(), Level::National), Err(Error::Data(_))));
        let f = write("date,deathIncrease\n2020-02-26,1\n2020-02-27,-4\n");
        let ds = load_covid_csv(f.path(), Level::National).unwrap();
        assert_eq!(ds.target_values(&Region::national()).unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn generic_percent_split() {
        let f = write(&national_file(
            NaiveDate::from_ymd_opt(2020, 2, 26).unwrap(),
            NaiveDate::from_ymd_opt(2020, 6, 4).unwrap(),
        ));
        let ds = load_covid_csv(f.path(), Level::National).unwrap();
        assert_eq!(ds.len(), 100);
        assert!(matches!(train_test_split(&ds, Level::National), Err(Error::Config(_))));
        let (train, test) = split_percent(&ds, 60).unwrap();
        assert_eq!((train.len(), test.len()), (60, 40));
        assert_eq!(test.start_date(), ds.start_date() + Duration::days(60));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let f = write(&national_file(
            NaiveDate::from_ymd_opt(2020, 2, 20).unwrap(),
            NaiveDate::from_ymd_opt(2020, 5, 1).unwrap(),
        ));
        let ds = load_covid_csv(f.path(), Level::National).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        ds.write_csv(out.path()).unwrap();
        let back = load_covid_csv(out.path(), Level::National).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn flows() {
        let ok = "origin,destination,date,visitor_flows,pop_flows\n\
                  GA,FL,2020-03-01,10,100\nFL,GA,2020-03-01,5,50\nGA,GA,20200302,1.5,12.25\n";
        let load = read_flows(ok.as_bytes()).unwrap();
        assert_eq!(load.records.len(), 3);
        assert_eq!(load.dropped, 0);
        assert_eq!(load.records[2].pop_flows, 12.25);

        let unknown = "origin,destination,date,visitor_flows,pop_flows\nGA,ZZ,2020-03-01,1,1\nGA,FL,2020-03-01,1,1\n";
        let load = read_flows(unknown.as_bytes()).unwrap();
        assert_eq!((load.records.len(), load.dropped), (1, 1));

        let negative = "origin,destination,date,visitor_flows,pop_flows\nGA,FL,2020-03-01,-5,1\n";
        assert!(matches!(read_flows(negative.as_bytes()), Err(Error::Data(_))));

        let bad_header = "from,to,date,visitor_flows,pop_flows\n";
        assert!(matches!(read_flows(bad_header.as_bytes()), Err(Error::Schema(_))));
    }
}
