//! Synthetic data: thinning simulation of Poisson catalogs, tapered Pareto
//! burn areas, station weather, and complete generated scenarios.

mod pareto;
mod scenario;
mod thinning;
mod weather;

pub use pareto::{sample_tapered_pareto, TaperedPareto};
pub use scenario::{default_shape, Scenario, ScenarioConfig, TruthConfig};
pub use thinning::{
    check_rate_bound, grid_max_rate, simulate_catalog, simulate_events, ThinningConfig,
};
pub use weather::{
    simulate_weather, EpisodeConfig, SeasonalSeries, SimulatedWeather, WeatherConfig,
};
