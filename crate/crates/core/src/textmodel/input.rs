use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

/// Sinusoidal positional encoding: `sin(p / 10000^(2j/k))` in even columns and
/// the matching cosine in odd columns.
pub fn positional_encoding(len: usize, dim: usize) -> Result<Array2<f64>> {
    if len == 0 {
        return Err(Error::invalid("sequence length", "must be at least 1"));
    }
    if dim < 2 || !dim.is_multiple_of(2) {
        return Err(Error::invalid(
            "embedding dimension",
            format!("positional encoding needs an even dimension >= 2, got {dim}"),
        ));
    }
    let mut pe = Array2::zeros((len, dim));
    for p in 0..len {
        for j in 0..dim / 2 {
            let angle = p as f64 / 10000f64.powf(2.0 * j as f64 / dim as f64);
            pe[[p, 2 * j]] = angle.sin();
            pe[[p, 2 * j + 1]] = angle.cos();
        }
    }
    Ok(pe)
}

/// Lifts a per-position scalar profile to `L x k`: row `i` is
/// `profile[i] * direction`.
pub fn expand_posce(profile: &[f64], direction: &Array1<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((profile.len(), direction.len()));
    for (mut row, &p) in out.axis_iter_mut(Axis(0)).zip(profile) {
        row.assign(&(direction * p));
    }
    out
}

/// The classifier input `F = F_tok + F_pos + F_posce` for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct InputRepresentation {
    f: Array2<f64>,
    profile: Vec<f64>,
    aspect_position: usize,
}

impl InputRepresentation {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.f
    }

    /// The PosCE profile that was lifted into `F`.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn len(&self) -> usize {
        self.f.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.f.nrows() == 0
    }

    pub fn aspect_position(&self) -> usize {
        self.aspect_position
    }
}

/// Sums token rows, the positional encoding for their length and the lifted
/// PosCE profile.
pub fn compose_input(
    token_rows: &Array2<f64>,
    profile: &[f64],
    posce_direction: &Array1<f64>,
    aspect_position: usize,
) -> Result<InputRepresentation> {
    let (len, dim) = token_rows.dim();
    if len == 0 {
        return Err(Error::invalid("sentence", "no tokens to compose"));
    }
    if profile.len() != len {
        return Err(Error::Shape(format!(
            "PosCE profile has {} entries for {len} tokens",
            profile.len()
        )));
    }
    if posce_direction.len() != dim {
        return Err(Error::Shape(format!(
            "PosCE direction has {} entries for embedding dimension {dim}",
            posce_direction.len()
        )));
    }
    if aspect_position >= len {
        return Err(Error::invalid(
            "aspect position",
            format!("{aspect_position} outside a {len}-token sentence"),
        ));
    }
    let f = token_rows + &positional_encoding(len, dim)? + &expand_posce(profile, posce_direction);
    Ok(InputRepresentation {
        f,
        profile: profile.to_vec(),
        aspect_position,
    })
}
