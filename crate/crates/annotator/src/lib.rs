//! HTTP/JSON service for reviewing segments: listing, audio, time-frequency
//! images, constrained relabeling and relabel-file export.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET | `/segments?status=&page=&page_size=` | paged review items |
//! | GET | `/segments/{id}/audio` | 16-bit WAV |
//! | GET | `/segments/{id}/image?kind=wst\|stft&scale=` | PNG |
//! | POST | `/segments/{id}/label` | body `{"to": "Unknown" \| "confirm", "note": ...}` |
//! | GET | `/export` | relabel file (JSON lines) |

mod error;
pub mod render;
pub mod review;
pub mod server;

pub use error::{AnnotatorError, Result};
pub use review::{Action, AuditEntry, ReviewItem, ReviewStatus};
pub use server::{router, serve, LabelRequest, SegmentPage, ServerConfig};
