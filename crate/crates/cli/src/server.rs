//! Read-only HTTP access to one instance and one diagram.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde_json::{json, Value};
use timewindow::io;
use timewindow::{ActivityDiagram, TimeWindowQuery};
use tower_http::services::ServeDir;

const INDEX: &str = include_str!("index.html");

pub struct App {
    instance_json: String,
    diagram_json: String,
    diagram: ActivityDiagram,
}

impl App {
    pub fn load(instance: &Path, diagram: &Path) -> Result<Self> {
        let instance_json = fs::read_to_string(instance)
            .with_context(|| format!("reading {}", instance.display()))?;
        let diagram_json = fs::read_to_string(diagram)
            .with_context(|| format!("reading {}", diagram.display()))?;
        let loaded = io::load_instance(instance)
            .with_context(|| format!("loading {}", instance.display()))?;
        let diagram = io::load_diagram(diagram)
            .with_context(|| format!("loading {}", diagram.display()))?;
        if diagram.instance().as_ref() != &loaded {
            bail!("diagram does not belong to {}", instance.display());
        }
        Ok(Self { instance_json, diagram_json, diagram })
    }

    /// Body and status for `/api/query` with the given parameters.
    pub fn query(&self, params: &HashMap<String, String>) -> (StatusCode, Value) {
        match self.window(params).and_then(|q| self.diagram.query(q).map_err(|e| e.to_string())) {
            Ok(active) => (StatusCode::OK, json!({ "active": active })),
            Err(message) => (StatusCode::BAD_REQUEST, json!({ "error": message })),
        }
    }

    fn window(&self, params: &HashMap<String, String>) -> Result<TimeWindowQuery, String> {
        let get = |name: &str| -> Result<f64, String> {
            let raw = params.get(name).ok_or_else(|| format!("missing parameter '{name}'"))?;
            raw.trim()
                .parse::<f64>()
                .map_err(|_| format!("parameter '{name}' is not a number: {raw:?}"))
        };
        TimeWindowQuery::new(get("from")?, get("to")?).map_err(|e| e.to_string())
    }
}

fn json_text(body: &str) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body.to_owned()).into_response()
}

pub fn router(app: Arc<App>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/instance", get(|State(app): State<Arc<App>>| async move { json_text(&app.instance_json) }))
        .route("/api/diagram", get(|State(app): State<Arc<App>>| async move { json_text(&app.diagram_json) }))
        .route(
            "/api/query",
            get(|State(app): State<Arc<App>>, Query(params): Query<HashMap<String, String>>| async move {
                let (status, body) = app.query(&params);
                (status, Json(body))
            }),
        )
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX) })),
    }
}

pub async fn serve(app: App, host: &str, port: u16, static_dir: Option<PathBuf>) -> Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port))
        .await
        .with_context(|| format!("binding {host}:{port}"))?;
    println!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(app), static_dir)).await?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use timewindow::generators::{gen_powers, gen_powers_reference};

    fn app() -> App {
        let instance = gen_powers(8).unwrap();
        App {
            instance_json: io::instance_to_json(&instance).to_string(),
            diagram_json: String::new(),
            diagram: gen_powers_reference(8).unwrap(),
        }
    }

    fn params(pairs: &[(&str, &str)]) -> HashMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn corner_window() {
        let (status, body) = app().query(&params(&[("from", "0"), ("to", "64")]));
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body, json!({"active": [0]}));
    }

    #[test]
    fn bad_parameters() {
        for p in [
            params(&[("from", "x"), ("to", "1")]),
            params(&[("from", "1")]),
            params(&[("from", "5"), ("to", "1")]),
            params(&[("from", "0"), ("to", "65")]),
            params(&[("from", "NaN"), ("to", "1")]),
        ] {
            let (status, body) = app().query(&p);
            assert_eq!(status, StatusCode::BAD_REQUEST, "{p:?}");
            assert!(body["error"].is_string());
        }
    }
}
