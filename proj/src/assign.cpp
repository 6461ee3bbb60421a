#include "curselab/assign.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "curselab/common.hpp"
#include "curselab/tabular.hpp"

namespace curselab::assign {

void AssignmentInstance::validate() const {
  int N = num_refugees();
  int L = num_locations();
  if (N == 0) fail("assignment: no refugees");
  if (L == 0) fail("assignment: no locations");
  long total = 0;
  for (int c : capacities) {
    if (c < 0) fail("assignment: negative capacity");
    total += c;
  }
  if (total < N)
    fail("assignment: total capacity " + std::to_string(total) +
         " below refugee count " + std::to_string(N));
  for (const auto& row : scores) {
    if (static_cast<int>(row.size()) != L)
      fail("assignment: ragged score matrix");
    for (double s : row)
      if (!std::isfinite(s)) fail("assignment: non-finite score");
  }
}

namespace {

struct Move {
  int refugee;
  int from;  // -1 when the refugee was unassigned
  int to;
};

/// Shared state of the lexicographic canonicalization pass.
struct CanonState {
  const AssignmentInstance* inst;
  std::vector<int>* a;
  std::vector<int> usage;
  std::vector<std::vector<int>> at;    // refugees currently at each location
  std::vector<std::vector<int>> adm;   // admissible locations per refugee
  std::vector<std::vector<int>> radj;  // refugees admitting each location
  std::vector<bool> locked;            // fixed refugees never move again
  const std::vector<double>* v;
  double eps;

  void apply(const Move& m, std::vector<Move>* log) {
    auto& lst = at[static_cast<std::size_t>(m.from)];
    lst.erase(std::find(lst.begin(), lst.end(), m.refugee));
    at[static_cast<std::size_t>(m.to)].push_back(m.refugee);
    usage[static_cast<std::size_t>(m.from)]--;
    usage[static_cast<std::size_t>(m.to)]++;
    (*a)[static_cast<std::size_t>(m.refugee)] = m.to;
    if (log) log->push_back(m);
  }

  void undo(const std::vector<Move>& log) {
    for (auto it = log.rbegin(); it != log.rend(); ++it)
      apply({it->refugee, it->to, it->from}, nullptr);
  }

  /// Finds a chain of admissible single-refugee moves draining one unit from
  /// `start` into some location with spare capacity, and applies it.
  bool drain_overflow(int start, std::vector<Move>* log) {
    int L = inst->num_locations();
    std::vector<int> prev_loc(static_cast<std::size_t>(L), -2);
    std::vector<int> prev_ref(static_cast<std::size_t>(L), -1);
    std::vector<int> queue;
    prev_loc[static_cast<std::size_t>(start)] = -1;
    queue.push_back(start);
    int goal = -1;
    for (std::size_t qi = 0; qi < queue.size() && goal < 0; ++qi) {
      int x = queue[qi];
      if (x != start &&
          usage[static_cast<std::size_t>(x)] <
              inst->capacities[static_cast<std::size_t>(x)]) {
        goal = x;
        break;
      }
      for (int r : at[static_cast<std::size_t>(x)]) {
        if (locked[static_cast<std::size_t>(r)]) continue;
        for (int t : adm[static_cast<std::size_t>(r)]) {
          if (prev_loc[static_cast<std::size_t>(t)] != -2) continue;
          prev_loc[static_cast<std::size_t>(t)] = x;
          prev_ref[static_cast<std::size_t>(t)] = r;
          if (usage[static_cast<std::size_t>(t)] <
              inst->capacities[static_cast<std::size_t>(t)]) {
            goal = t;
            break;
          }
          queue.push_back(t);
        }
        if (goal >= 0) break;
      }
    }
    if (goal < 0) return false;
    // Walk back from the goal, moving each chain refugee one hop forward.
    std::vector<Move> chain;
    int t = goal;
    while (prev_loc[static_cast<std::size_t>(t)] >= 0) {
      chain.push_back({prev_ref[static_cast<std::size_t>(t)],
                       prev_loc[static_cast<std::size_t>(t)], t});
      t = prev_loc[static_cast<std::size_t>(t)];
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) apply(*it, log);
    return true;
  }

  /// Finds a chain pushing one unit into `sink` from a donor location with
  /// zero potential (one whose usage is free to drop), and applies it.
  bool refill_deficit(int sink, std::vector<Move>* log) {
    int L = inst->num_locations();
    std::vector<int> next_loc(static_cast<std::size_t>(L), -2);
    std::vector<int> next_ref(static_cast<std::size_t>(L), -1);
    std::vector<int> queue;
    next_loc[static_cast<std::size_t>(sink)] = -1;
    queue.push_back(sink);
    int donor = -1;
    for (std::size_t qi = 0; qi < queue.size() && donor < 0; ++qi) {
      int x = queue[qi];
      for (int r : radj[static_cast<std::size_t>(x)]) {
        if (locked[static_cast<std::size_t>(r)]) continue;
        int w = (*a)[static_cast<std::size_t>(r)];
        if (w == x || next_loc[static_cast<std::size_t>(w)] != -2) continue;
        next_loc[static_cast<std::size_t>(w)] = x;
        next_ref[static_cast<std::size_t>(w)] = r;
        if ((*v)[static_cast<std::size_t>(w)] >= -eps) {
          donor = w;
          break;
        }
        queue.push_back(w);
      }
    }
    if (donor < 0) return false;
    int w = donor;
    while (next_loc[static_cast<std::size_t>(w)] >= 0) {
      int x = next_loc[static_cast<std::size_t>(w)];
      apply({next_ref[static_cast<std::size_t>(w)], w, x}, log);
      w = x;
    }
    return true;
  }

  /// Attempts to reassign refugee i to location t while keeping the matching
  /// on the optimal face: arcs admissible, capacities respected, and every
  /// negative-potential location exactly full.
  bool try_move(int i, int t) {
    int s = (*a)[static_cast<std::size_t>(i)];
    std::vector<Move> log;
    locked[static_cast<std::size_t>(i)] = true;  // chains must not move i
    apply({i, s, t}, &log);
    bool ok = true;
    if (usage[static_cast<std::size_t>(t)] >
        inst->capacities[static_cast<std::size_t>(t)])
      ok = drain_overflow(t, &log);
    if (ok && (*v)[static_cast<std::size_t>(s)] < -eps &&
        usage[static_cast<std::size_t>(s)] <
            inst->capacities[static_cast<std::size_t>(s)])
      ok = refill_deficit(s, &log);
    if (!ok) {
      undo(log);
      locked[static_cast<std::size_t>(i)] = false;
      return false;
    }
    return true;
  }
};

}  // namespace

SolveResult solve(const AssignmentInstance& inst) {
  inst.validate();
  const int N = inst.num_refugees();
  const int L = inst.num_locations();
  auto cost = [&](int i, int t) {
    return -inst.scores[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
  };

  std::vector<double> v(static_cast<std::size_t>(L), 0.0);
  std::vector<int> a(static_cast<std::size_t>(N), -1);
  std::vector<int> usage(static_cast<std::size_t>(L), 0);
  std::vector<std::vector<int>> at(static_cast<std::size_t>(L));

  std::vector<double> dist(static_cast<std::size_t>(L));
  std::vector<char> settled(static_cast<std::size_t>(L));
  std::vector<int> parent_loc(static_cast<std::size_t>(L));
  std::vector<int> parent_ref(static_cast<std::size_t>(L));

  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < L; ++t) {
      auto u = static_cast<std::size_t>(t);
      dist[u] = cost(i, t) - v[u];
      settled[u] = 0;
      parent_loc[u] = -1;
      parent_ref[u] = i;
    }
    int found = -1;
    while (true) {
      int best = -1;
      for (int t = 0; t < L; ++t) {
        auto u = static_cast<std::size_t>(t);
        if (!settled[u] &&
            (best < 0 || dist[u] < dist[static_cast<std::size_t>(best)]))
          best = t;
      }
      if (best < 0) break;
      auto ub = static_cast<std::size_t>(best);
      settled[ub] = 1;
      if (usage[ub] < inst.capacities[ub]) {
        found = best;
        break;
      }
      for (int r : at[ub]) {
        double base = cost(r, best) - v[ub];
        for (int t2 = 0; t2 < L; ++t2) {
          auto u2 = static_cast<std::size_t>(t2);
          if (settled[u2]) continue;
          double nd = dist[ub] + (cost(r, t2) - v[u2]) - base;
          if (nd < dist[u2]) {
            dist[u2] = nd;
            parent_loc[u2] = best;
            parent_ref[u2] = r;
          }
        }
      }
    }
    if (found < 0) fail("solve: augmentation failed on a feasible instance");
    double D = dist[static_cast<std::size_t>(found)];
    for (int t = 0; t < L; ++t) {
      auto u = static_cast<std::size_t>(t);
      if (settled[u]) v[u] += dist[u] - D;
    }
    // Walk the augmenting path backwards, shifting each chain refugee one
    // hop; the new refugee enters at the chain head.
    int t = found;
    while (true) {
      auto u = static_cast<std::size_t>(t);
      int r = parent_ref[u];
      int from = parent_loc[u];
      if (from >= 0) {
        auto& lst = at[static_cast<std::size_t>(from)];
        lst.erase(std::find(lst.begin(), lst.end(), r));
      }
      a[static_cast<std::size_t>(r)] = t;
      at[u].push_back(r);
      if (from < 0) break;
      t = from;
    }
    usage[static_cast<std::size_t>(found)]++;
  }

  // Lexicographic canonicalization: walk refugees in index order and move
  // each to the smallest admissible location that still admits a completion
  // on the optimal face.
  double scale = 1.0;
  for (const auto& row : inst.scores)
    for (double s : row) scale = std::max(scale, std::abs(s));
  double eps = 1e-9 * scale;

  CanonState st;
  st.inst = &inst;
  st.a = &a;
  st.usage = usage;
  st.at = at;
  st.v = &v;
  st.eps = eps;
  st.locked.assign(static_cast<std::size_t>(N), false);
  st.adm.resize(static_cast<std::size_t>(N));
  st.radj.resize(static_cast<std::size_t>(L));
  for (int i = 0; i < N; ++i) {
    auto ui = static_cast<std::size_t>(i);
    double u_i = cost(i, a[ui]) - v[static_cast<std::size_t>(a[ui])];
    for (int t = 0; t < L; ++t) {
      auto ut = static_cast<std::size_t>(t);
      if (cost(i, t) - v[ut] <= u_i + eps) {
        st.adm[ui].push_back(t);
        st.radj[ut].push_back(i);
      }
    }
  }
  for (int i = 0; i < N; ++i) {
    auto ui = static_cast<std::size_t>(i);
    for (int t : st.adm[ui]) {
      if (t == a[ui]) break;
      if (st.try_move(i, t)) break;
    }
    st.locked[ui] = true;
  }

  SolveResult result;
  result.matching.assignment = a;
  result.potentials = v;
  double objective = 0.0;
  for (int i = 0; i < N; ++i)
    objective +=
        inst.scores[static_cast<std::size_t>(i)][static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
  result.objective = objective;
  if (!certificate_ok(inst, result))
    fail("solve: optimality certificate violated (internal error)");
  return result;
}

bool certificate_ok(const AssignmentInstance& inst, const SolveResult& result,
                    double tolerance) {
  const int N = inst.num_refugees();
  const int L = inst.num_locations();
  const auto& a = result.matching.assignment;
  const auto& v = result.potentials;
  if (static_cast<int>(a.size()) != N || static_cast<int>(v.size()) != L)
    return false;
  double scale = 1.0;
  for (const auto& row : inst.scores)
    for (double s : row) scale = std::max(scale, std::abs(s));
  double eps = tolerance * scale;

  std::vector<int> usage(static_cast<std::size_t>(L), 0);
  for (int i = 0; i < N; ++i) {
    int t = a[static_cast<std::size_t>(i)];
    if (t < 0 || t >= L) return false;
    usage[static_cast<std::size_t>(t)]++;
  }
  for (int t = 0; t < L; ++t) {
    auto u = static_cast<std::size_t>(t);
    if (usage[u] > inst.capacities[u]) return false;
    if (v[u] > eps) return false;  // potentials must be <= 0
    // Complementary slackness: a location priced below zero must be full.
    if (v[u] < -eps && usage[u] != inst.capacities[u]) return false;
  }
  for (int i = 0; i < N; ++i) {
    auto ui = static_cast<std::size_t>(i);
    auto ut = static_cast<std::size_t>(a[ui]);
    double assigned = -inst.scores[ui][ut] - v[ut];
    for (int t = 0; t < L; ++t) {
      auto u2 = static_cast<std::size_t>(t);
      if (-inst.scores[ui][u2] - v[u2] < assigned - eps) return false;
    }
  }
  return true;
}

std::vector<int> capacities_from_observed(const tabular::Dataset& test) {
  std::vector<int> caps(static_cast<std::size_t>(test.num_locations), 0);
  for (int t : test.locations) {
    if (t < 0 || t >= test.num_locations)
      fail("capacities_from_observed: location out of range");
    caps[static_cast<std::size_t>(t)]++;
  }
  return caps;
}

void write_instance(const AssignmentInstance& inst, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail("write_instance: cannot open '" + path + "'");
  std::vector<std::string> caps;
  for (int c : inst.capacities) caps.push_back(std::to_string(c));
  os << join_csv(caps) << '\n';
  for (const auto& row : inst.scores) {
    std::vector<std::string> fields;
    for (double s : row) fields.push_back(format_double(s));
    os << join_csv(fields) << '\n';
  }
}

AssignmentInstance read_instance(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("read_instance: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) fail("read_instance: empty file");
  AssignmentInstance inst;
  for (const auto& f : split_csv_line(line))
    inst.capacities.push_back(static_cast<int>(parse_long(f)));
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& f : split_csv_line(line)) row.push_back(parse_double(f));
    inst.scores.push_back(std::move(row));
  }
  inst.validate();
  return inst;
}

}  // namespace curselab::assign
