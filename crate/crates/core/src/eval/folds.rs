use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One leave-one-room-out split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub test_room: String,
    pub train_rooms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

/// One fold per room, rooms in lexicographic order.
pub fn loro_folds<S: AsRef<str>>(rooms: &[S]) -> Result<FoldPlan> {
    let mut rooms: Vec<String> = rooms.iter().map(|r| r.as_ref().to_string()).collect();
    rooms.sort();
    rooms.dedup();
    if rooms.len() < 2 {
        return Err(Error::Config(format!(
            "leave-one-room-out needs at least 2 rooms, got {}",
            rooms.len()
        )));
    }
    let folds = rooms
        .iter()
        .map(|test| Fold {
            test_room: test.clone(),
            train_rooms: rooms.iter().filter(|r| *r != test).cloned().collect(),
        })
        .collect();
    Ok(FoldPlan { folds })
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    /// Indices of items whose room is the fold's test room, and the rest.
    pub fn split<'a, T>(&self, fold: usize, items: &'a [T], room: impl Fn(&T) -> &str) -> (Vec<&'a T>, Vec<&'a T>) {
        let test_room = &self.folds[fold].test_room;
        items.iter().partition(|it| room(it) != test_room)
    }
}
