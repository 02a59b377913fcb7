#pragma once

// Fixed-radius neighbor search over periodic and non-periodic boxes.
//
// Three strategies produce the same canonical edge set:
//  * vectorized  - every particle scans the full candidate row of its cell,
//                  materializing N * cand candidate slots before pruning;
//  * chunked     - the particles are split into M chunks which are scanned
//                  and pruned one after another, so only ceil(N/M) * cand
//                  slots are alive at a time;
//  * padded      - a capacity-free binned search for systems whose particle
//                  count varies; edge rows are padded to a fixed length with
//                  a sentinel index.
// neighbor_pairs_bruteforce is the O(N^2) reference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "sphkit/core.hpp"

namespace sphkit {

/// Directed edges. displacements[e] = x[senders[e]] - x[receivers[e]]
/// (minimum image), distances[e] = |displacements[e]|.
template <int Dim>
struct EdgeSet {
  std::vector<Index> senders;
  std::vector<Index> receivers;
  std::vector<Vec<Dim>> displacements;
  std::vector<double> distances;

  std::size_t size() const { return senders.size(); }
  bool empty() const { return senders.empty(); }

  void reserve(std::size_t n) {
    senders.reserve(n);
    receivers.reserve(n);
    displacements.reserve(n);
    distances.reserve(n);
  }
  void clear() {
    senders.clear();
    receivers.clear();
    displacements.clear();
    distances.clear();
  }
  void push_back(Index s, Index r, const Vec<Dim>& d, double dist) {
    senders.push_back(s);
    receivers.push_back(r);
    displacements.push_back(d);
    distances.push_back(dist);
  }
};

/// Sorts edges by (sender, receiver).
template <int Dim>
void canonicalize(EdgeSet<Dim>& edges) {
  const std::size_t n = edges.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (edges.senders[a] != edges.senders[b]) return edges.senders[a] < edges.senders[b];
    return edges.receivers[a] < edges.receivers[b];
  });
  EdgeSet<Dim> sorted;
  sorted.reserve(n);
  for (std::size_t k : order)
    sorted.push_back(edges.senders[k], edges.receivers[k], edges.displacements[k],
                     edges.distances[k]);
  edges = std::move(sorted);
}

/// CSR row pointers of a canonical edge set: edges of sender i occupy
/// [offsets[i], offsets[i+1]).
template <int Dim>
std::vector<std::size_t> row_offsets(const EdgeSet<Dim>& edges, std::size_t num_particles) {
  std::vector<std::size_t> offsets(num_particles + 1, 0);
  for (Index s : edges.senders) {
    if (s >= num_particles) throw ContractError("edge sender out of range");
    ++offsets[s + 1];
  }
  for (std::size_t i = 0; i < num_particles; ++i) offsets[i + 1] += offsets[i];
  return offsets;
}

/// Recomputes displacements and distances from current positions, keeping
/// the connectivity.
template <int Dim>
void refresh_geometry(EdgeSet<Dim>& edges, std::span<const Vec<Dim>> positions,
                      const Domain<Dim>& domain) {
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Vec<Dim> d = domain.displacement(positions[edges.senders[e]], positions[edges.receivers[e]]);
    edges.displacements[e] = d;
    edges.distances[e] = norm(d);
  }
}

struct NeighborStats {
  std::size_t candidate_slots = 0;  // total slots scanned, sentinel included
  std::size_t candidate_pairs = 0;  // slots holding a real particle other than self
  std::size_t retained = 0;         // edges within the cutoff
  std::size_t peak_buffer = 0;      // largest number of slots alive at once
  std::size_t chunks = 0;

  double pruning_ratio() const {
    return candidate_pairs == 0 ? 0.0
                                : static_cast<double>(retained) / static_cast<double>(candidate_pairs);
  }
};

// ---------------------------------------------------------------------------
// Grid geometry shared by the cell list and the binned search
// ---------------------------------------------------------------------------

template <int Dim>
struct CellGrid {
  Vec<Dim> origin;
  Vec<Dim> cell_size;
  std::array<int, Dim> dims{};
  std::array<bool, Dim> periodic{};

  std::size_t num_cells() const {
    std::size_t c = 1;
    for (int a = 0; a < Dim; ++a) c *= static_cast<std::size_t>(dims[a]);
    return c;
  }

  std::array<int, Dim> coords_of(const Vec<Dim>& x) const {
    std::array<int, Dim> ic{};
    for (int a = 0; a < Dim; ++a) {
      int k = static_cast<int>(std::floor((x[a] - origin[a]) / cell_size[a]));
      if (periodic[a]) {
        k %= dims[a];
        if (k < 0) k += dims[a];
      } else {
        k = std::clamp(k, 0, dims[a] - 1);
      }
      ic[a] = k;
    }
    return ic;
  }

  std::size_t flatten(const std::array<int, Dim>& ic) const {
    std::size_t id = 0;
    for (int a = 0; a < Dim; ++a) id = id * static_cast<std::size_t>(dims[a]) + ic[a];
    return id;
  }

  std::size_t cell_of(const Vec<Dim>& x) const { return flatten(coords_of(x)); }

  /// Cells reachable from `cell` (including itself), in fixed offset order.
  /// Entries that fall outside a non-periodic axis are reported as nullopt so
  /// rows keep a fixed length.
  std::vector<std::optional<std::size_t>> reachable(std::size_t cell) const {
    std::array<int, Dim> base{};
    std::size_t rest = cell;
    for (int a = Dim - 1; a >= 0; --a) {
      base[a] = static_cast<int>(rest % dims[a]);
      rest /= dims[a];
    }
    std::vector<std::optional<std::size_t>> out;
    int total = 1;
    for (int a = 0; a < Dim; ++a) total *= 3;
    out.reserve(total);
    for (int code = 0; code < total; ++code) {
      std::array<int, Dim> ic{};
      bool inside = true;
      int c = code;
      for (int a = Dim - 1; a >= 0; --a) {
        int k = base[a] + (c % 3) - 1;
        c /= 3;
        if (periodic[a]) {
          k = (k + dims[a]) % dims[a];
        } else if (k < 0 || k >= dims[a]) {
          inside = false;
        }
        ic[a] = k;
      }
      if (inside)
        out.emplace_back(flatten(ic));
      else
        out.emplace_back(std::nullopt);
    }
    return out;
  }
};

/// Periodic axes need at least three cells so the 3^dim stencil never visits
/// a cell twice; `allow_coarse` relaxes this for the deduplicating binned
/// search.
template <int Dim>
CellGrid<Dim> make_grid(std::span<const Vec<Dim>> positions, const Domain<Dim>& domain,
                        double cutoff, bool allow_coarse = false) {
  if (!(cutoff > 0.0)) throw ConfigError("neighbor cutoff must be positive");
  CellGrid<Dim> g;
  for (int a = 0; a < Dim; ++a) {
    g.periodic[a] = domain.is_periodic(a);
    if (g.periodic[a]) {
      const double L = domain.extent(a);
      const int n = static_cast<int>(std::floor(L / cutoff));
      if (n < 3 && !allow_coarse)
        throw ConfigError("cutoff too large for periodic box: fewer than 3 cells on an axis");
      if (2.0 * cutoff > L) throw ConfigError("cutoff exceeds half the periodic box");
      g.dims[a] = std::max(n, 1);
      g.origin[a] = 0.0;
      g.cell_size[a] = L / g.dims[a];
    } else {
      double lo = 0.0;
      double hi = domain.extent(a);
      for (const auto& x : positions) {
        lo = std::min(lo, x[a]);
        hi = std::max(hi, x[a]);
      }
      const double range = hi - lo;
      const int n = std::max(1, static_cast<int>(std::floor(range / cutoff)));
      g.dims[a] = n;
      g.origin[a] = lo;
      g.cell_size[a] = std::max(range / n, cutoff);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Fixed-capacity cell list
// ---------------------------------------------------------------------------

template <int Dim>
struct CellList {
  CellGrid<Dim> grid;
  Index num_particles = 0;
  Index capacity = 0;
  Index cand = 0;                  // capacity * reachable cells
  std::vector<Index> cell_of;      // particle -> cell
  std::vector<Index> counts;       // true occupancy, may exceed capacity
  std::vector<Index> slots;        // [C x capacity], sentinel = num_particles
  std::vector<Index> candidates;   // [C x cand], sentinel = num_particles
  bool overflow = false;

  Index sentinel() const { return num_particles; }
  std::size_t num_cells() const { return grid.num_cells(); }
  Index max_occupancy() const {
    return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  }
};

inline Index default_cell_capacity(std::size_t num_particles, std::size_t num_cells) {
  const double expected = static_cast<double>(num_particles) / static_cast<double>(num_cells);
  return static_cast<Index>(std::max(1.0, std::ceil(1.25 * expected)));
}

/// capacity == 0 selects ceil(1.25 * expected occupancy).
template <int Dim>
CellList<Dim> build_cell_list(std::span<const Vec<Dim>> positions, const Domain<Dim>& domain,
                              double cutoff, Index capacity = 0) {
  CellList<Dim> cl;
  cl.grid = make_grid(positions, domain, cutoff);
  cl.num_particles = static_cast<Index>(positions.size());
  const std::size_t C = cl.grid.num_cells();
  cl.capacity = capacity == 0 ? default_cell_capacity(positions.size(), C) : capacity;
  int reach = 1;
  for (int a = 0; a < Dim; ++a) reach *= 3;
  cl.cand = cl.capacity * static_cast<Index>(reach);

  const Index sentinel = cl.num_particles;
  cl.cell_of.resize(positions.size());
  cl.counts.assign(C, 0);
  cl.slots.assign(C * cl.capacity, sentinel);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const std::size_t c = cl.grid.cell_of(positions[i]);
    cl.cell_of[i] = static_cast<Index>(c);
    const Index k = cl.counts[c]++;
    if (k < cl.capacity)
      cl.slots[c * cl.capacity + k] = static_cast<Index>(i);
    else
      cl.overflow = true;
  }

  cl.candidates.assign(C * cl.cand, sentinel);
  for (std::size_t c = 0; c < C; ++c) {
    const auto reachable = cl.grid.reachable(c);
    Index* row = cl.candidates.data() + c * cl.cand;
    for (std::size_t r = 0; r < reachable.size(); ++r) {
      if (!reachable[r]) continue;
      const Index* src = cl.slots.data() + *reachable[r] * cl.capacity;
      std::copy(src, src + cl.capacity, row + r * cl.capacity);
    }
  }
  return cl;
}

namespace detail {

struct CandidateSlot {
  Index other;
  double r2;
};

template <int Dim>
void scan_chunk(const CellList<Dim>& cl, std::span<const Vec<Dim>> positions,
                const Domain<Dim>& domain, double cutoff, std::size_t begin, std::size_t end,
                std::vector<CandidateSlot>& buffer, EdgeSet<Dim>& out, NeighborStats& stats) {
  const Index sentinel = cl.sentinel();
  const double cut2 = cutoff * cutoff;
  const std::size_t cand = cl.cand;
  std::size_t used = 0;
  // Fill: one slot per (particle, candidate), sentinel slots included.
  for (std::size_t i = begin; i < end; ++i) {
    const Index* row = cl.candidates.data() + static_cast<std::size_t>(cl.cell_of[i]) * cand;
    for (std::size_t k = 0; k < cand; ++k) {
      const Index j = row[k];
      CandidateSlot& slot = buffer[used++];
      slot.other = j;
      if (j == sentinel || j == i) {
        slot.r2 = INFINITY;
        continue;
      }
      ++stats.candidate_pairs;
      slot.r2 = norm2(domain.displacement(positions[i], positions[j]));
    }
  }
  stats.candidate_slots += used;
  stats.peak_buffer = std::max(stats.peak_buffer, used);

  // Prune.
  std::vector<Index> kept;
  for (std::size_t i = begin; i < end; ++i) {
    kept.clear();
    const CandidateSlot* row = buffer.data() + (i - begin) * cand;
    for (std::size_t k = 0; k < cand; ++k)
      if (row[k].r2 <= cut2) kept.push_back(row[k].other);
    std::sort(kept.begin(), kept.end());
    for (Index j : kept) {
      const Vec<Dim> d = domain.displacement(positions[i], positions[j]);
      out.push_back(static_cast<Index>(i), j, d, norm(d));
    }
  }
}

}  // namespace detail

/// Scans the particles in `chunks` consecutive groups. chunks == 1 is the
/// fully vectorized search.
template <int Dim>
EdgeSet<Dim> neighbor_pairs_chunked(const CellList<Dim>& cl, std::span<const Vec<Dim>> positions,
                                    const Domain<Dim>& domain, double cutoff, std::size_t chunks,
                                    NeighborStats* stats = nullptr) {
  if (cl.overflow) throw NeighborOverflowError("cell list overflowed; rebuild with larger capacity");
  if (positions.size() != cl.num_particles)
    throw ContractError("positions do not match the cell list");
  const std::size_t C = cl.num_cells();
  if (chunks < 1 || chunks > std::max<std::size_t>(C, 1))
    throw ContractError("chunk count must lie in [1, number of cells]");

  NeighborStats local;
  EdgeSet<Dim> out;
  const std::size_t N = positions.size();
  if (N == 0) {
    if (stats) *stats = local;
    return out;
  }
  const std::size_t per_chunk = (N + chunks - 1) / chunks;
  std::vector<detail::CandidateSlot> buffer(per_chunk * cl.cand);
  for (std::size_t begin = 0; begin < N; begin += per_chunk) {
    const std::size_t end = std::min(N, begin + per_chunk);
    detail::scan_chunk(cl, positions, domain, cutoff, begin, end, buffer, out, local);
    ++local.chunks;
  }
  local.retained = out.size();
  if (stats) *stats = local;
  return out;
}

template <int Dim>
EdgeSet<Dim> neighbor_pairs_vectorized(const CellList<Dim>& cl, std::span<const Vec<Dim>> positions,
                                       const Domain<Dim>& domain, double cutoff,
                                       NeighborStats* stats = nullptr) {
  return neighbor_pairs_chunked(cl, positions, domain, cutoff, 1, stats);
}

/// O(N^2) reference search.
template <int Dim>
EdgeSet<Dim> neighbor_pairs_bruteforce(std::span<const Vec<Dim>> positions,
                                       const Domain<Dim>& domain, double cutoff) {
  EdgeSet<Dim> out;
  if (!(cutoff > 0.0)) return out;
  const double cut2 = cutoff * cutoff;
  const std::size_t N = positions.size();
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      if (i == j) continue;
      const Vec<Dim> d = periodic_displacement(domain, positions[i], positions[j]);
      if (norm2(d) <= cut2) out.push_back(static_cast<Index>(i), static_cast<Index>(j), d, norm(d));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Padded search for variable particle counts
// ---------------------------------------------------------------------------

template <int Dim>
struct PaddedEdgeSet {
  EdgeSet<Dim> edges;            // real edges first, then sentinel rows
  std::size_t num_real = 0;
  Index sentinel = 0;            // equals max_N
};

template <int Dim>
EdgeSet<Dim> strip_padding(const PaddedEdgeSet<Dim>& padded) {
  EdgeSet<Dim> out;
  out.reserve(padded.num_real);
  for (std::size_t e = 0; e < padded.edges.size(); ++e) {
    if (padded.edges.senders[e] == padded.sentinel) continue;
    out.push_back(padded.edges.senders[e], padded.edges.receivers[e],
                  padded.edges.displacements[e], padded.edges.distances[e]);
  }
  return out;
}

namespace detail {

/// Binned search via counting sort; no per-cell capacity. Output is in
/// canonical order.
template <int Dim>
EdgeSet<Dim> binned_pairs(std::span<const Vec<Dim>> positions, const Domain<Dim>& domain,
                          double cutoff, std::size_t reserve_hint = 0) {
  EdgeSet<Dim> out;
  const std::size_t N = positions.size();
  if (N == 0) return out;
  const CellGrid<Dim> grid = make_grid(positions, domain, cutoff, /*allow_coarse=*/true);
  const std::size_t C = grid.num_cells();
  std::vector<std::size_t> cell(N);
  std::vector<std::size_t> start(C + 1, 0);
  for (std::size_t i = 0; i < N; ++i) {
    cell[i] = grid.cell_of(positions[i]);
    ++start[cell[i] + 1];
  }
  for (std::size_t c = 0; c < C; ++c) start[c + 1] += start[c];
  std::vector<Index> sorted(N);
  {
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < N; ++i) sorted[fill[cell[i]]++] = static_cast<Index>(i);
  }
  // Deduplicated stencil per occupied cell, built on first use.
  std::vector<std::vector<std::size_t>> stencils(C);
  std::vector<bool> built(C, false);
  auto stencil_of = [&](std::size_t c) -> const std::vector<std::size_t>& {
    if (!built[c]) {
      auto& st = stencils[c];
      for (const auto& r : grid.reachable(c))
        if (r) st.push_back(*r);
      std::sort(st.begin(), st.end());
      st.erase(std::unique(st.begin(), st.end()), st.end());
      built[c] = true;
    }
    return stencils[c];
  };

  const double cut2 = cutoff * cutoff;
  std::vector<Index> kept;
  out.reserve(std::max(reserve_hint, N * 32));
  for (std::size_t i = 0; i < N; ++i) {
    kept.clear();
    const Vec<Dim> xi = positions[i];
    for (std::size_t c : stencil_of(cell[i])) {
      for (std::size_t k = start[c]; k < start[c + 1]; ++k) {
        const Index j = sorted[k];
        if (j != i && norm2(domain.displacement(xi, positions[j])) <= cut2) kept.push_back(j);
      }
    }
    std::sort(kept.begin(), kept.end());
    for (Index j : kept) {
      const Vec<Dim> d = domain.displacement(xi, positions[j]);
      out.push_back(static_cast<Index>(i), j, d, norm(d));
    }
  }
  return out;
}

}  // namespace detail

/// Edges among the N <= max_n real particles. When edge_capacity is given
/// the edge rows are padded up to it with (max_n, max_n, 0, 0).
template <int Dim>
PaddedEdgeSet<Dim> padded_neighbor_pairs(std::span<const Vec<Dim>> positions, std::size_t max_n,
                                         const Domain<Dim>& domain, double cutoff,
                                         std::optional<std::size_t> edge_capacity = std::nullopt) {
  if (positions.size() > max_n)
    throw CapacityError("particle count " + std::to_string(positions.size()) +
                        " exceeds padded maximum " + std::to_string(max_n));
  PaddedEdgeSet<Dim> out;
  out.sentinel = static_cast<Index>(max_n);
  out.edges = detail::binned_pairs(positions, domain, cutoff);
  out.num_real = out.edges.size();
  if (edge_capacity) {
    if (out.num_real > *edge_capacity)
      throw CapacityError("edge count " + std::to_string(out.num_real) +
                          " exceeds padded edge capacity " + std::to_string(*edge_capacity));
    for (std::size_t e = out.num_real; e < *edge_capacity; ++e)
      out.edges.push_back(out.sentinel, out.sentinel, Vec<Dim>{}, 0.0);
  }
  return out;
}

/// Pads every instance of a variable-size batch to the largest edge count in
/// the batch.
template <int Dim>
std::vector<PaddedEdgeSet<Dim>> padded_neighbor_pairs_batch(
    const std::vector<std::vector<Vec<Dim>>>& batch, std::size_t max_n, const Domain<Dim>& domain,
    double cutoff) {
  std::vector<PaddedEdgeSet<Dim>> out;
  out.reserve(batch.size());
  std::size_t widest = 0;
  for (const auto& instance : batch) {
    out.push_back(padded_neighbor_pairs<Dim>(instance, max_n, domain, cutoff));
    widest = std::max(widest, out.back().num_real);
  }
  for (auto& p : out)
    for (std::size_t e = p.num_real; e < widest; ++e)
      p.edges.push_back(p.sentinel, p.sentinel, Vec<Dim>{}, 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Strategy front end
// ---------------------------------------------------------------------------

enum class SearchStrategy { vectorized, chunked, padded, bruteforce };

struct SearchOptions {
  SearchStrategy strategy = SearchStrategy::vectorized;
  Index capacity = 0;               // 0: ceil(1.25 * expected occupancy)
  std::size_t chunks = 0;           // 0: target a buffer of <= 2^20 slots
  std::size_t target_buffer = std::size_t{1} << 20;
};

/// Canonical edge set with automatic grow-and-rebuild on cell overflow.
template <int Dim>
EdgeSet<Dim> find_neighbors(std::span<const Vec<Dim>> positions, const Domain<Dim>& domain,
                            double cutoff, const SearchOptions& options = {},
                            NeighborStats* stats = nullptr) {
  EdgeSet<Dim> edges;
  switch (options.strategy) {
    case SearchStrategy::bruteforce:
      edges = neighbor_pairs_bruteforce(positions, domain, cutoff);
      break;
    case SearchStrategy::padded:
      edges = strip_padding(padded_neighbor_pairs(positions, positions.size(), domain, cutoff));
      break;
    case SearchStrategy::vectorized:
    case SearchStrategy::chunked: {
      CellList<Dim> cl = build_cell_list(positions, domain, cutoff, options.capacity);
      if (cl.overflow) cl = build_cell_list(positions, domain, cutoff, cl.max_occupancy());
      std::size_t chunks = 1;
      if (options.strategy == SearchStrategy::chunked) {
        chunks = options.chunks;
        if (chunks == 0) {
          const std::size_t slots = positions.size() * cl.cand;
          chunks = std::max<std::size_t>(1, (slots + options.target_buffer - 1) / options.target_buffer);
        }
        chunks = std::clamp<std::size_t>(chunks, 1, std::max<std::size_t>(1, cl.num_cells()));
      }
      edges = neighbor_pairs_chunked(cl, positions, domain, cutoff, chunks, stats);
      return edges;  // already canonical
    }
  }
  canonicalize(edges);
  return edges;
}

}  // namespace sphkit
