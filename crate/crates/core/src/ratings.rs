use std::collections::HashMap;

use crate::error::{Error, Result};

/// Users × routes grid of ratings in `[0, 10]`. Missing cells are unrated;
/// a generated matrix is complete, evaluation splits are sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsMatrix {
    user_ids: Vec<u32>,
    route_ids: Vec<String>,
    cells: Vec<Option<f64>>,
    user_index: HashMap<u32, usize>,
    route_index: HashMap<String, usize>,
}

fn check_rating(v: f64) -> Result<()> {
    if !(0.0..=10.0).contains(&v) {
        return Err(Error::Validation(format!("rating {v} outside [0, 10]")));
    }
    Ok(())
}

impl RatingsMatrix {
    pub fn from_cells(user_ids: Vec<u32>, route_ids: Vec<String>, cells: Vec<Option<f64>>) -> Result<Self> {
        if cells.len() != user_ids.len() * route_ids.len() {
            return Err(Error::LengthMismatch {
                left: cells.len(),
                right: user_ids.len() * route_ids.len(),
            });
        }
        for v in cells.iter().flatten() {
            check_rating(*v)?;
        }
        let mut user_index = HashMap::with_capacity(user_ids.len());
        for (i, &u) in user_ids.iter().enumerate() {
            if user_index.insert(u, i).is_some() {
                return Err(Error::Validation(format!("duplicate user id {u}")));
            }
        }
        let mut route_index = HashMap::with_capacity(route_ids.len());
        for (i, r) in route_ids.iter().enumerate() {
            if route_index.insert(r.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate route id `{r}`")));
            }
        }
        Ok(RatingsMatrix {
            user_ids,
            route_ids,
            cells,
            user_index,
            route_index,
        })
    }

    /// Builds a matrix from dense rows (`None` = unrated).
    pub fn from_rows(user_ids: Vec<u32>, route_ids: Vec<String>, rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let m = route_ids.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: m,
            });
        }
        if rows.len() != user_ids.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: user_ids.len(),
            });
        }
        Self::from_cells(user_ids, route_ids, rows.into_iter().flatten().collect())
    }

    pub fn empty(user_ids: Vec<u32>, route_ids: Vec<String>) -> Result<Self> {
        let n = user_ids.len() * route_ids.len();
        Self::from_cells(user_ids, route_ids, vec![None; n])
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_routes(&self) -> usize {
        self.route_ids.len()
    }

    pub fn user_ids(&self) -> &[u32] {
        &self.user_ids
    }

    pub fn route_ids(&self) -> &[String] {
        &self.route_ids
    }

    pub fn user_position(&self, id: u32) -> Result<usize> {
        self.user_index.get(&id).copied().ok_or(Error::UnknownUser(id))
    }

    pub fn route_position(&self, id: &str) -> Result<usize> {
        self.route_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownRoute(id.to_string()))
    }

    pub fn row(&self, user: usize) -> &[Option<f64>] {
        let m = self.n_routes();
        &self.cells[user * m..(user + 1) * m]
    }

    pub fn get(&self, user: usize, route: usize) -> Option<f64> {
        self.cells[user * self.n_routes() + route]
    }

    pub fn set(&mut self, user: usize, route: usize, value: Option<f64>) -> Result<()> {
        if let Some(v) = value {
            check_rating(v)?;
        }
        let m = self.n_routes();
        self.cells[user * m + route] = value;
        Ok(())
    }

    pub fn cells(&self) -> &[Option<f64>] {
        &self.cells
    }

    /// Number of rated cells.
    pub fn n_ratings(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    /// Rated cells as `(user index, route index, rating)` in row-major order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let m = self.n_routes();
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.map(|v| (i / m, i % m, v)))
    }
}
