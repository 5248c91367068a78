//! HTTP and WebSocket front end for voxchat sessions.
//!
//! See [`app::router`] for the routes and [`config::ServerConfig`] for the
//! environment variables the server reads.

pub mod app;
pub mod config;
pub mod error;
pub mod live;

pub use app::{router, AppState, API_VERSION};
pub use config::{ConfigError, ProviderKind, ServerConfig};
pub use error::ApiError;
pub use live::LiveProvider;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/server.md")]
mod book_server {}
