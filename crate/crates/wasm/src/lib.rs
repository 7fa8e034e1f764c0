//! Browser bindings for the clustering demo in `www/`.
//!
//! Everything is 2D. Runs use the calling thread; the browser has no rayon
//! worker pool here.

use chainhac::cli::datasets::{gen_gaussian_disc, gen_uniform};
use chainhac::{run, Dendrogram, Linkage, PointSet, RunOptions, RunStats};
use wasm_bindgen::prelude::*;

/// A point set plus the result of the last clustering run on it.
#[wasm_bindgen]
pub struct Demo {
    points: PointSet,
    last: Option<(Dendrogram, RunStats)>,
}

impl Demo {
    pub fn generate(kind: &str, n: usize, seed: u32) -> chainhac::Result<Demo> {
        let points = match kind {
            "uniform" => gen_uniform(n, 2, seed.into())?,
            "gaussian" => gen_gaussian_disc(n, 2, seed.into())?,
            other => {
                return Err(chainhac::Error::InvalidInput(format!(
                    "unknown dataset '{other}'"
                )))
            }
        };
        Ok(Demo { points, last: None })
    }

    pub fn run_linkage(
        &mut self,
        linkage: &str,
        cache_size: Option<usize>,
    ) -> chainhac::Result<()> {
        let kind: Linkage = linkage.parse()?;
        let mut opts = RunOptions::new(kind);
        if let Some(s) = cache_size {
            opts = opts.cache_size(s);
        }
        let out = run(&self.points, &opts)?;
        self.last = Some((out.dendrogram, out.stats));
        Ok(())
    }

    pub fn cut(&self, k: usize) -> chainhac::Result<Vec<u32>> {
        match &self.last {
            Some((d, _)) => d.cut(k.clamp(1, self.points.len())),
            None => Ok(vec![0; self.points.len()]),
        }
    }

    pub fn dendrogram(&self) -> Option<&Dendrogram> {
        self.last.as_ref().map(|(d, _)| d)
    }
}

fn js(e: chainhac::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
impl Demo {
    /// `kind` is `uniform` or `gaussian`.
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, n: usize, seed: u32) -> Result<Demo, JsError> {
        Demo::generate(kind, n, seed).map_err(js)
    }

    #[wasm_bindgen(getter)]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[wasm_bindgen(getter)]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Interleaved `x, y` coordinates.
    pub fn coords(&self) -> Vec<f64> {
        self.points.coords().to_vec()
    }

    /// Clusters the points; `cache_size` falls back to the linkage default.
    pub fn cluster(&mut self, linkage: &str, cache_size: Option<usize>) -> Result<(), JsError> {
        self.run_linkage(linkage, cache_size).map_err(js)
    }

    /// Flat cluster label per point after cutting the tree into `k` parts.
    pub fn labels(&self, k: usize) -> Result<Vec<u32>, JsError> {
        self.cut(k).map_err(js)
    }

    /// Dendrogram rows flattened as `left, right, height, size`.
    pub fn merges(&self) -> Vec<f64> {
        self.dendrogram()
            .map(|d| {
                d.merges()
                    .iter()
                    .flat_map(|m| [m.left as f64, m.right as f64, m.height, m.size as f64])
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Per round: terminals, active clusters, merges.
    pub fn rounds(&self) -> Vec<u32> {
        self.last
            .as_ref()
            .map(|(_, s)| {
                s.rounds
                    .iter()
                    .flat_map(|r| [r.terminals as u32, r.active as u32, r.merges as u32])
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Cluster-distance evaluations of the last run.
    #[wasm_bindgen(getter)]
    pub fn distance_evaluations(&self) -> f64 {
        self.last
            .as_ref()
            .map_or(0.0, |(_, s)| s.cluster_distances as f64)
    }
}
