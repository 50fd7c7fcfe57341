use super::graph::{Label, TravelGraph};
use super::{CrewRoute, RouteStatus, RoutingError, TaskSite, MAX_TASKS};
use crate::ids::{NodeId, RouteId, TaskId};

struct Tour {
    cost: f64,
    order: Vec<usize>,
}

/// Keeps the `k` best tours by `(cost, order)`.
struct TopK {
    k: usize,
    tours: Vec<Tour>,
}

impl TopK {
    fn bound(&self) -> Option<f64> {
        (self.tours.len() == self.k).then(|| self.tours[self.k - 1].cost)
    }

    fn offer(&mut self, cost: f64, order: &[usize]) {
        let pos = self
            .tours
            .partition_point(|t| t.cost.total_cmp(&cost).then_with(|| t.order.as_slice().cmp(order)).is_lt());
        if pos < self.k {
            self.tours.insert(
                pos,
                Tour {
                    cost,
                    order: order.to_vec(),
                },
            );
            self.tours.truncate(self.k);
        }
    }
}

struct Search<'a> {
    /// `leg[i][j]`: stop `i` (or the depot at index `n`) to stop `j`.
    leg: &'a [Vec<Option<f64>>],
    n: usize,
    used: Vec<bool>,
    order: Vec<usize>,
    top: TopK,
}

impl Search<'_> {
    /// Visits permutations in lexicographic order, so a tour that ties the
    /// current bound never displaces an earlier one.
    fn extend(&mut self, at: usize, cost: f64) {
        if self.order.len() == self.n {
            self.top.offer(cost, &self.order);
            return;
        }
        for next in 0..self.n {
            if self.used[next] {
                continue;
            }
            let Some(step) = self.leg[at][next] else { continue };
            let total = cost + step;
            if self.top.bound().is_some_and(|b| total > b) {
                continue;
            }
            self.used[next] = true;
            self.order.push(next);
            self.extend(next, total);
            self.order.pop();
            self.used[next] = false;
        }
    }
}

fn route_id(i: usize, count: usize) -> RouteId {
    let width = count.to_string().len().max(2);
    RouteId::new(format!("R{:0width$}", i + 1))
}

/// Evaluates every visit order of `sites` as an open tour from `depot`
/// and returns the `k` cheapest by weighted cost. Equal costs are ordered
/// by the task-id sequence. Sites are visited in ascending task id order
/// when costs tie throughout.
pub fn candidate_routes(
    g: &TravelGraph,
    depot: &NodeId,
    sites: &[TaskSite],
    k: usize,
) -> Result<Vec<CrewRoute>, RoutingError> {
    if k == 0 {
        return Err(RoutingError::Validation("k must be at least 1".into()));
    }
    if sites.is_empty() || sites.len() > MAX_TASKS {
        return Err(RoutingError::Validation(format!(
            "between 1 and {MAX_TASKS} tasks are required, got {}",
            sites.len()
        )));
    }
    let mut sites: Vec<&TaskSite> = sites.iter().collect();
    sites.sort_by(|a, b| a.task.cmp(&b.task));
    if sites.windows(2).any(|w| w[0].task == w[1].task) {
        return Err(RoutingError::Validation("duplicate task id".into()));
    }

    let depot_v = g.vertex(depot).ok_or_else(|| RoutingError::UnknownVertex(depot.clone()))?;
    let site_v = sites
        .iter()
        .map(|s| g.vertex(&s.vertex).ok_or_else(|| RoutingError::UnknownVertex(s.vertex.clone())))
        .collect::<Result<Vec<_>, _>>()?;

    let n = sites.len();
    let labels: Vec<Vec<Option<Label>>> = site_v
        .iter()
        .chain(std::iter::once(&depot_v))
        .map(|&v| g.labels_from(v))
        .collect();
    for (s, &v) in sites.iter().zip(&site_v) {
        if labels[n][v].is_none() {
            return Err(RoutingError::Unreachable {
                from: depot.clone(),
                to: s.vertex.clone(),
            });
        }
    }
    let leg: Vec<Vec<Option<f64>>> = labels
        .iter()
        .map(|row| site_v.iter().map(|&v| row[v].as_ref().map(|l| l.cost)).collect())
        .collect();

    let mut search = Search {
        leg: &leg,
        n,
        used: vec![false; n],
        order: Vec::with_capacity(n),
        top: TopK {
            k,
            tours: Vec::with_capacity(k),
        },
    };
    search.extend(n, 0.0);
    let tours = search.top.tours;
    if tours.is_empty() {
        return Err(RoutingError::Unreachable {
            from: depot.clone(),
            to: sites[0].vertex.clone(),
        });
    }

    let count = tours.len();
    Ok(tours
        .into_iter()
        .enumerate()
        .map(|(rank, tour)| {
            let mut at = n;
            let mut legs = Vec::with_capacity(n);
            let mut travel = 0.0;
            let mut max_risk: f64 = 0.0;
            for &next in &tour.order {
                let label = labels[at][site_v[next]].as_ref().expect("leg exists for a complete tour");
                let path = g.path_of(label);
                travel += path.travel_hours;
                max_risk = max_risk.max(path.max_risk);
                legs.push(path.vertices);
                at = next;
            }
            CrewRoute {
                id: route_id(rank, count),
                task_order: tour.order.iter().map(|&i| sites[i].task.clone()).collect::<Vec<TaskId>>(),
                legs,
                total_travel_hours: travel,
                weighted_cost: tour.cost,
                max_leg_risk: max_risk,
                indicators: None,
                composite: None,
                status: RouteStatus::Candidate,
                history: Vec::new(),
            }
        })
        .collect())
}
