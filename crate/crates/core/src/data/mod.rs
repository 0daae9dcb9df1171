//! Data model and file IO: fire catalogs, station records, calendar
//! conventions and the study domain.

mod calendar;
mod catalog;
mod domain;
mod stations;

pub use calendar::{parse_date, Calendar, YEAR_DAYS};
pub use catalog::{FireCatalog, FireEvent, CATALOG_HEADER};
pub use domain::{DomainConfig, Region, SpaceTimeGrid, SpatialCell, StudyDomain, TimeCell};
pub use stations::{Station, StationDay, StationTable, Variable, DAILY_HEADER, STATION_HEADER};
