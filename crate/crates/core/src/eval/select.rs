use crate::error::{Error, Result};

/// A candidate hyperparameter setting.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint<P> {
    pub params: P,
    /// Dimension values compared lexicographically to break accuracy ties
    /// (smaller wins); empty when not applicable.
    pub dims: Vec<usize>,
}

/// Validation result of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Accuracy(f64),
    /// The point cannot be evaluated on this data; it is skipped.
    Infeasible(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<P> {
    pub params: P,
    pub validation_accuracy: f64,
    /// One note per skipped grid point.
    pub notes: Vec<String>,
}

/// Picks the grid point with the highest validation accuracy. Equal
/// accuracies go to the smaller dimensions, then to the earlier point.
pub fn select_hyperparams<P, F>(points: &[GridPoint<P>], mut evaluate: F) -> Result<Selection<P>>
where
    P: Clone,
    F: FnMut(&P) -> Result<Outcome>,
{
    if points.is_empty() {
        return Err(Error::Config("hyperparameter grid is empty".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    let mut notes = Vec::new();
    for (i, point) in points.iter().enumerate() {
        match evaluate(&point.params)? {
            Outcome::Infeasible(why) => notes.push(format!("skipped grid point {}: {why}", i + 1)),
            Outcome::Accuracy(acc) => {
                let better = match best {
                    None => true,
                    Some((j, b)) => acc > b || (acc == b && point.dims < points[j].dims),
                };
                if better {
                    best = Some((i, acc));
                }
            }
        }
    }
    match best {
        Some((i, acc)) => Ok(Selection {
            params: points[i].params.clone(),
            validation_accuracy: acc,
            notes,
        }),
        None => Err(Error::NoFeasibleGridPoint(format!("all {} grid points were skipped", points.len()))),
    }
}
