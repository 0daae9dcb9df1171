use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use super::calendar::{parse_date, Calendar};
use super::catalog::{csv_error, parse_number};
use crate::error::{Error, Result};

pub const STATION_HEADER: [&str; 3] = ["station_id", "x_km", "y_km"];
pub const DAILY_HEADER: [&str; 8] = [
    "station_id",
    "date",
    "temp_c",
    "rh_pct",
    "wind_kph",
    "wind_dir_deg",
    "precip_mm",
    "bi",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

/// Daily station variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    Temperature,
    Humidity,
    WindSpeed,
    WindDirection,
    Precipitation,
    BurningIndex,
}

/// One station's record for one day. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StationDay {
    /// Index into [`StationTable::stations`].
    pub station: usize,
    pub day: i64,
    /// °C
    pub temp: Option<f64>,
    /// Relative humidity, percent.
    pub rh: Option<f64>,
    /// km/h
    pub wind: Option<f64>,
    /// Radians in [0, 2π).
    pub wind_dir: Option<f64>,
    /// mm
    pub precip: Option<f64>,
    pub bi: Option<f64>,
}

impl StationDay {
    pub fn empty(station: usize, day: i64) -> Self {
        Self {
            station,
            day,
            temp: None,
            rh: None,
            wind: None,
            wind_dir: None,
            precip: None,
            bi: None,
        }
    }

    pub fn get(&self, var: Variable) -> Option<f64> {
        match var {
            Variable::Temperature => self.temp,
            Variable::Humidity => self.rh,
            Variable::WindSpeed => self.wind,
            Variable::WindDirection => self.wind_dir,
            Variable::Precipitation => self.precip,
            Variable::BurningIndex => self.bi,
        }
    }

    fn validate(&self, row: usize) -> Result<()> {
        let check = |v: Option<f64>, col: &str, ok: &dyn Fn(f64) -> bool, what: &str| match v {
            Some(x) if !x.is_finite() || !ok(x) => Err(Error::Schema {
                row,
                column: col.into(),
                message: format!("{what}, got {x}"),
            }),
            _ => Ok(()),
        };
        check(self.temp, "temp_c", &|_| true, "must be finite")?;
        check(
            self.rh,
            "rh_pct",
            &|h| (0.0..=100.0).contains(&h),
            "must lie in [0, 100]",
        )?;
        check(self.wind, "wind_kph", &|w| w >= 0.0, "must be >= 0")?;
        check(
            self.wind_dir,
            "wind_dir_deg",
            &|d| (0.0..TAU).contains(&d),
            "must lie in [0, 2π)",
        )?;
        check(self.precip, "precip_mm", &|p| p >= 0.0, "must be >= 0")?;
        check(self.bi, "bi", &|b| b >= 0.0, "must be >= 0")?;
        Ok(())
    }
}

/// Stations plus their daily records, indexed by day.
#[derive(Debug, Clone, PartialEq)]
pub struct StationTable {
    stations: Vec<Station>,
    records: Vec<StationDay>,
    by_day: BTreeMap<i64, Range<usize>>,
}

impl StationTable {
    pub fn new(stations: Vec<Station>, mut records: Vec<StationDay>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, s) in stations.iter().enumerate() {
            if seen.insert(s.id.clone(), i).is_some() {
                return Err(Error::DuplicateStation(s.id.clone()));
            }
            if !s.x.is_finite() || !s.y.is_finite() {
                return Err(Error::NonFinite(format!("coordinates of station {}", s.id)));
            }
        }
        for (i, r) in records.iter().enumerate() {
            if r.station >= stations.len() {
                return Err(Error::UnknownStation(format!("#{}", r.station)));
            }
            r.validate(i + 1)?;
        }
        records.sort_by_key(|r| (r.day, r.station));
        let mut by_day = BTreeMap::new();
        let mut start = 0;
        for i in 1..=records.len() {
            if i == records.len() || records[i].day != records[start].day {
                by_day.insert(records[start].day, start..i);
                start = i;
            }
        }
        Ok(Self {
            stations,
            records,
            by_day,
        })
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn records(&self) -> &[StationDay] {
        &self.records
    }

    /// Records reported on `day`, ordered by station index.
    pub fn on_day(&self, day: i64) -> &[StationDay] {
        match self.by_day.get(&day) {
            Some(r) => &self.records[r.clone()],
            None => &[],
        }
    }

    pub fn day_range(&self) -> Option<(i64, i64)> {
        let first = *self.by_day.keys().next()?;
        let last = *self.by_day.keys().next_back()?;
        Some((first, last))
    }

    pub fn station_index(&self, id: &str) -> Option<usize> {
        self.stations.iter().position(|s| s.id == id)
    }

    /// Reads the station metadata and daily CSV files.
    pub fn load(
        meta_path: impl AsRef<Path>,
        daily_path: impl AsRef<Path>,
        calendar: Calendar,
    ) -> Result<Self> {
        let (mp, dp) = (meta_path.as_ref(), daily_path.as_ref());
        let meta = std::fs::File::open(mp).map_err(|e| Error::io(mp, e))?;
        let daily = std::fs::File::open(dp).map_err(|e| Error::io(dp, e))?;
        Self::read(meta, daily, calendar)
    }

    pub fn read<R1: Read, R2: Read>(meta: R1, daily: R2, calendar: Calendar) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(meta);
        let header = header_of(&mut rdr)?;
        let idx = column_indices(&header, &STATION_HEADER)?;
        let mut stations = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| csv_error(e, row))?;
            let id = rec.get(idx[0]).unwrap_or("").to_string();
            if id.is_empty() {
                return Err(Error::Schema {
                    row,
                    column: "station_id".into(),
                    message: "empty id".into(),
                });
            }
            stations.push(Station {
                id,
                x: parse_number(rec.get(idx[1]).unwrap_or(""), row, "x_km")?,
                y: parse_number(rec.get(idx[2]).unwrap_or(""), row, "y_km")?,
            });
        }
        let index: HashMap<&str, usize> = stations
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();

        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(daily);
        let header = header_of(&mut rdr)?;
        let idx = column_indices(&header, &DAILY_HEADER)?;
        let mut records = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| csv_error(e, row))?;
            let field = |k: usize| rec.get(idx[k]).unwrap_or("");
            let id = field(0);
            let station = *index
                .get(id)
                .ok_or_else(|| Error::UnknownStation(id.to_string()))?;
            let date = parse_date(field(1), row)?;
            let opt = |k: usize| -> Result<Option<f64>> {
                let s = field(k);
                if s.is_empty() {
                    Ok(None)
                } else {
                    parse_number(s, row, DAILY_HEADER[k]).map(Some)
                }
            };
            let record = StationDay {
                station,
                day: calendar.day_index(date),
                temp: opt(2)?,
                rh: opt(3)?,
                wind: opt(4)?,
                wind_dir: opt(5)?.map(|deg| deg.to_radians().rem_euclid(TAU)),
                precip: opt(6)?,
                bi: opt(7)?,
            };
            record.validate(row)?;
            records.push(record);
        }
        Self::new(stations, records)
    }

    pub fn write_meta<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(STATION_HEADER)
            .map_err(|e| csv_error(e, 0))?;
        for (i, s) in self.stations.iter().enumerate() {
            w.write_record([s.id.clone(), s.x.to_string(), s.y.to_string()])
                .map_err(|e| csv_error(e, i + 1))?;
        }
        w.flush().map_err(|e| Error::io("<station writer>", e))
    }

    pub fn write_daily<W: Write>(&self, writer: W, calendar: Calendar) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(DAILY_HEADER).map_err(|e| csv_error(e, 0))?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (i, r) in self.records.iter().enumerate() {
            w.write_record([
                self.stations[r.station].id.clone(),
                calendar.date_of_day(r.day).format("%Y-%m-%d").to_string(),
                fmt(r.temp),
                fmt(r.rh),
                fmt(r.wind),
                fmt(r.wind_dir.map(f64::to_degrees)),
                fmt(r.precip),
                fmt(r.bi),
            ])
            .map_err(|e| csv_error(e, i + 1))?;
        }
        w.flush().map_err(|e| Error::io("<daily writer>", e))
    }

    pub fn save(
        &self,
        meta_path: impl AsRef<Path>,
        daily_path: impl AsRef<Path>,
        calendar: Calendar,
    ) -> Result<()> {
        let (mp, dp) = (meta_path.as_ref(), daily_path.as_ref());
        let meta = std::fs::File::create(mp).map_err(|e| Error::io(mp, e))?;
        self.write_meta(std::io::BufWriter::new(meta))?;
        let daily = std::fs::File::create(dp).map_err(|e| Error::io(dp, e))?;
        self.write_daily(std::io::BufWriter::new(daily), calendar)
    }
}

fn header_of<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<String>> {
    Ok(rdr
        .headers()
        .map_err(|e| csv_error(e, 0))?
        .iter()
        .map(str::to_string)
        .collect())
}

fn column_indices(header: &[String], names: &[&str]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::Schema {
                    row: 0,
                    column: n.to_string(),
                    message: "missing column".into(),
                })
        })
        .collect()
}
