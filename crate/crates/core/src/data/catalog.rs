use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::calendar::{parse_date, Calendar};
use crate::error::{Error, Result};
use crate::geometry::Polygon;

pub const CATALOG_HEADER: [&str; 5] = ["date", "x_km", "y_km", "area_km2", "polygon_wkt"];

#[derive(Debug, Clone, PartialEq)]
pub struct FireEvent {
    /// Days since the catalog epoch.
    pub time: f64,
    pub x: f64,
    pub y: f64,
    /// Burn area in km².
    pub area: f64,
    pub polygon: Option<Polygon>,
}

impl FireEvent {
    pub fn new(time: f64, x: f64, y: f64, area: f64) -> Self {
        Self {
            time,
            x,
            y,
            area,
            polygon: None,
        }
    }

    pub fn day(&self) -> i64 {
        self.time.floor() as i64
    }
}

/// Time-ordered fire events with the prior/fit split.
#[derive(Debug, Clone, PartialEq)]
pub struct FireCatalog {
    events: Vec<FireEvent>,
    calendar: Calendar,
    split: f64,
}

impl FireCatalog {
    /// Builds a catalog, sorting events by time (stable).
    pub fn new(mut events: Vec<FireEvent>, calendar: Calendar, split: f64) -> Result<Self> {
        for (i, e) in events.iter().enumerate() {
            validate_event(e, i + 1)?;
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        if !split.is_finite() {
            return Err(Error::invalid("split", split, "must be finite"));
        }
        Ok(Self {
            events,
            calendar,
            split,
        })
    }

    pub fn events(&self) -> &[FireEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn calendar(&self) -> Calendar {
        self.calendar
    }

    pub fn split(&self) -> f64 {
        self.split
    }

    /// Events strictly before the split (background-estimation period).
    pub fn prior_events(&self) -> &[FireEvent] {
        let k = self.events.partition_point(|e| e.time < self.split);
        &self.events[..k]
    }

    /// Events in `[t0, t1)`.
    pub fn events_between(&self, t0: f64, t1: f64) -> &[FireEvent] {
        let a = self.events.partition_point(|e| e.time < t0);
        let b = self.events.partition_point(|e| e.time < t1);
        &self.events[a..b]
    }

    /// Reads the catalog CSV. Event times are placed at the midpoint of
    /// their day.
    pub fn load(path: impl AsRef<Path>, calendar: Calendar, split: f64) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(file, calendar, split)
    }

    pub fn read<R: Read>(reader: R, calendar: Calendar, split: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| csv_error(e, 0))?
            .iter()
            .map(str::to_string)
            .collect::<Vec<_>>();
        let col = |name: &str, required: bool| -> Result<Option<usize>> {
            match header.iter().position(|h| h == name) {
                Some(i) => Ok(Some(i)),
                None if required => Err(Error::Schema {
                    row: 0,
                    column: name.to_string(),
                    message: "missing column".into(),
                }),
                None => Ok(None),
            }
        };
        let (c_date, c_x, c_y, c_area) = (
            col("date", true)?.unwrap(),
            col("x_km", true)?.unwrap(),
            col("y_km", true)?.unwrap(),
            col("area_km2", true)?.unwrap(),
        );
        let c_poly = col("polygon_wkt", false)?;

        let mut events = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| csv_error(e, row))?;
            let field = |c: usize| rec.get(c).unwrap_or("");
            let date = parse_date(field(c_date), row)?;
            let x = parse_number(field(c_x), row, "x_km")?;
            let y = parse_number(field(c_y), row, "y_km")?;
            let area = parse_number(field(c_area), row, "area_km2")?;
            let polygon = match c_poly.map(field).filter(|s| !s.is_empty()) {
                Some(wkt) => Some(Polygon::from_wkt(wkt).map_err(|e| Error::Schema {
                    row,
                    column: "polygon_wkt".into(),
                    message: e.to_string(),
                })?),
                None => None,
            };
            let event = FireEvent {
                time: calendar.day_index(date) as f64 + 0.5,
                x,
                y,
                area,
                polygon,
            };
            validate_event(&event, row)?;
            events.push(event);
        }
        Self::new(events, calendar, split)
    }

    pub fn write_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CATALOG_HEADER)
            .map_err(|e| csv_error(e, 0))?;
        for (i, e) in self.events.iter().enumerate() {
            let date = self.calendar.date_of(e.time);
            let poly = e.polygon.as_ref().map(Polygon::to_wkt).unwrap_or_default();
            w.write_record([
                date.format("%Y-%m-%d").to_string(),
                e.x.to_string(),
                e.y.to_string(),
                e.area.to_string(),
                poly,
            ])
            .map_err(|err| csv_error(err, i + 1))?;
        }
        w.flush().map_err(|e| Error::io("<catalog writer>", e))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn epoch(&self) -> NaiveDate {
        self.calendar.epoch()
    }
}

fn validate_event(e: &FireEvent, row: usize) -> Result<()> {
    let schema = |column: &str, message: String| Error::Schema {
        row,
        column: column.into(),
        message,
    };
    if !e.time.is_finite() {
        return Err(schema("date", "non-finite time".into()));
    }
    if !e.x.is_finite() {
        return Err(schema("x_km", "non-finite coordinate".into()));
    }
    if !e.y.is_finite() {
        return Err(schema("y_km", "non-finite coordinate".into()));
    }
    if !(e.area >= 0.0) || !e.area.is_finite() {
        return Err(schema(
            "area_km2",
            format!("area must be >= 0, got {}", e.area),
        ));
    }
    if let Some(p) = &e.polygon {
        if !p.is_simple() {
            return Err(schema("polygon_wkt", "polygon is self-intersecting".into()));
        }
        if !p.contains(e.x, e.y) {
            return Err(schema(
                "polygon_wkt",
                "polygon does not contain the event location".into(),
            ));
        }
    }
    Ok(())
}

pub(crate) fn parse_number(text: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = text.trim().parse().map_err(|_| Error::Schema {
        row,
        column: column.into(),
        message: format!("cannot parse `{text}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Schema {
            row,
            column: column.into(),
            message: "non-finite value".into(),
        });
    }
    Ok(v)
}

pub(crate) fn csv_error(e: csv::Error, row: usize) -> Error {
    Error::Schema {
        row,
        column: String::new(),
        message: e.to_string(),
    }
}
