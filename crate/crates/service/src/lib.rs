pub mod api;
pub mod commands;
pub mod config;
pub mod sessions;

pub use api::{router, ApiSettings, AppState};
pub use config::ServiceConfig;
pub use sessions::SessionStore;
