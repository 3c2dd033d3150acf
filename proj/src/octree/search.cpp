#include "spocta/search.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>

#include "spocta/error.hpp"
#include "spocta/octree.hpp"
#include "spocta/octree_table.hpp"
#include "spocta/pnelut.hpp"
#include "spocta/tensor.hpp"

namespace spocta {

namespace {

std::uint64_t block_key(BlockId b) noexcept {
  return std::uint64_t{b.bx} | (std::uint64_t{b.by} << 16) | (std::uint64_t{b.bz} << 32);
}

// Stage 1: one octree table per occupied block, in traversal order.
struct BlockTables {
  std::unordered_map<std::uint64_t, std::uint32_t> ordinal;
  std::vector<OctreeTable> tables;
  std::vector<std::uint32_t> sizes;

  const OctreeTable* find(BlockId b) const {
    const auto it = ordinal.find(block_key(b));
    return it == ordinal.end() ? nullptr : &tables[it->second];
  }
};

BlockTables build_tables(std::span<const Coordinate> coords, std::span<const std::uint32_t> order) {
  BlockTables bt;
  for (const std::uint32_t v : order) {
    const Coordinate c = coords[v];
    const auto [it, fresh] = bt.ordinal.emplace(block_key(block_of(c)),
                                                static_cast<std::uint32_t>(bt.tables.size()));
    if (fresh) {
      bt.tables.emplace_back();
      bt.sizes.push_back(0);
    }
    bt.tables[it->second].insert(local_of(c), v);
    ++bt.sizes[it->second];
  }
  return bt;
}

std::optional<Coordinate> shifted(Coordinate c, long dx, long dy, long dz) {
  const long x = c.x + dx, y = c.y + dy, z = c.z + dz;
  if (x < 0 || y < 0 || z < 0 || x > 0xffff || y > 0xffff || z > 0xffff) return std::nullopt;
  return Coordinate{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                    static_cast<std::uint16_t>(z)};
}

// Sorted (coordinate, index) pairs for lookups without hashing or octree tables.
class SortedIndex {
 public:
  explicit SortedIndex(std::span<const Coordinate> coords) {
    items_.reserve(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
      items_.emplace_back(coords[i], static_cast<std::uint32_t>(i));
    }
    std::sort(items_.begin(), items_.end());
  }

  std::optional<std::uint32_t> find(Coordinate c) const {
    const auto it = std::lower_bound(items_.begin(), items_.end(), std::make_pair(c, 0u));
    if (it == items_.end() || it->first != c) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::pair<Coordinate, std::uint32_t>> items_;
};

std::vector<Coordinate> sorted_morton(std::vector<Coordinate> sites) {
  std::sort(sites.begin(), sites.end(), [](Coordinate a, Coordinate b) {
    return morton_key(a) < morton_key(b);
  });
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  return sites;
}

// Sites (theta - delta) / 2 reachable from one K=3 stride-2 input voxel.
template <typename F>
void for_each_gconv3_site(Coordinate c, const std::vector<Offset>& offsets, F&& f) {
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const long x = long{c.x} - offsets[k].dx, y = long{c.y} - offsets[k].dy,
               z = long{c.z} - offsets[k].dz;
    if (x < 0 || y < 0 || z < 0 || (x & 1) || (y & 1) || (z & 1)) continue;
    f(Coordinate{static_cast<std::uint16_t>(x / 2), static_cast<std::uint16_t>(y / 2),
                 static_cast<std::uint16_t>(z / 2)},
      static_cast<std::uint8_t>(k));
  }
}

}  // namespace

SearchResult search_subm3(std::span<const Coordinate> coords) {
  check_unique(coords);
  SearchResult r;
  r.map.op = OpKind::Subm3;
  r.trace.op = OpKind::Subm3;
  r.map.out_coords.assign(coords.begin(), coords.end());

  const auto order = morton_order(coords);
  const BlockTables bt = build_tables(coords, order);
  r.trace.block_sizes = bt.sizes;
  r.trace.voxels.reserve(coords.size());

  for (const std::uint32_t v : order) {
    const Coordinate c = coords[v];
    const BlockId home = block_of(c);
    const Pnelut& lut = pnelut_for(static_cast<std::uint8_t>(bank_of(local_of(c))));
    VoxelQueryRecord rec;
    rec.voxel = v;
    rec.block = bt.ordinal.at(block_key(home));
    rec.query_cycles = static_cast<std::uint8_t>(lut.max_row_length());

    for (std::size_t cnt = 0; cnt < lut.max_row_length(); ++cnt) {
      bool batch_left_block = false;
      for (unsigned row = 0; row < 8; ++row) {
        if (cnt >= lut.rows[row].size) continue;
        const NeighborDescriptor& nd = lut.rows[row].items[cnt];
        const auto target = shifted(c, nd.delta.dx, nd.delta.dy, nd.delta.dz);
        if (!target) continue;
        ++rec.candidates;
        // Each row owns one bank, so a batch never issues two queries to the same bank.
        if (bank_of(local_of(*target)) != row) ++r.trace.bank_conflicts;
        assert(bank_of(local_of(*target)) == row);
        const BlockId tb = block_of(*target);
        const OctreeTable* table = &bt.tables[rec.block];
        if (tb != home) {
          ++rec.cross_block;
          batch_left_block = true;
          table = bt.find(tb);
          if (table == nullptr) continue;
        }
        if (const auto hit = table->lookup(local_of(*target))) {
          r.map.entries.push_back(MapEntry{*hit, v, nd.kernel_offset_id});
          ++rec.hits;
        }
      }
      rec.cross_block_batches += batch_left_block;
      ++r.trace.query_batches;
    }
    r.trace.voxels.push_back(rec);
  }
  return r;
}

SearchResult search_gconv2(std::span<const Coordinate> coords) {
  check_unique(coords);
  SearchResult r;
  r.map.op = OpKind::Gconv2;
  r.trace.op = OpKind::Gconv2;

  const auto order = morton_order(coords);
  const BlockTables bt = build_tables(coords, order);
  r.trace.block_sizes = bt.sizes;
  r.trace.voxels.reserve(coords.size());

  // Children of one parent are adjacent in Morton order and share a block
  // and a slot address; the parent is resolved by one read across the banks.
  std::size_t i = 0;
  while (i < order.size()) {
    const Coordinate first = coords[order[i]];
    const Coordinate parent{static_cast<std::uint16_t>(first.x >> 1),
                            static_cast<std::uint16_t>(first.y >> 1),
                            static_cast<std::uint16_t>(first.z >> 1)};
    const auto out = static_cast<std::uint32_t>(r.map.out_coords.size());
    r.map.out_coords.push_back(parent);
    const std::uint32_t block = bt.ordinal.at(block_key(block_of(first)));
    const OctreeTable& table = bt.tables[block];
    const unsigned address = address_of(local_of(first));
    ++r.trace.query_batches;
    for (unsigned bank = 0; bank < OctreeTable::kBanks; ++bank) {
      const std::uint32_t v = table.slot(bank, address);
      if (v == OctreeTable::kEmpty) continue;
      r.map.entries.push_back(MapEntry{v, out, static_cast<std::uint8_t>(bank)});
      VoxelQueryRecord rec;
      rec.voxel = v;
      rec.block = block;
      rec.query_cycles = 1;
      rec.candidates = 1;
      rec.hits = 1;
      r.trace.voxels.push_back(rec);
      ++i;
    }
  }
  return r;
}

SearchResult search_gconv3(std::span<const Coordinate> coords) {
  check_unique(coords);
  SearchResult r;
  r.map.op = OpKind::Gconv3;
  r.trace.op = OpKind::Gconv3;
  const auto order = morton_order(coords);
  const auto offsets = kernel_offsets(3);

  std::vector<Coordinate> sites;
  for (const std::uint32_t v : order) {
    for_each_gconv3_site(coords[v], offsets, [&](Coordinate s, std::uint8_t) { sites.push_back(s); });
  }
  r.map.out_coords = sorted_morton(std::move(sites));
  std::unordered_map<Coordinate, std::uint32_t, CoordinateHash> site_index;
  site_index.reserve(r.map.out_coords.size());
  for (std::size_t s = 0; s < r.map.out_coords.size(); ++s) {
    site_index.emplace(r.map.out_coords[s], static_cast<std::uint32_t>(s));
  }

  r.trace.voxels.reserve(coords.size());
  for (const std::uint32_t v : order) {
    VoxelQueryRecord rec;
    rec.voxel = v;
    rec.query_cycles = 1;
    for_each_gconv3_site(coords[v], offsets, [&](Coordinate s, std::uint8_t k) {
      r.map.entries.push_back(MapEntry{v, site_index.at(s), k});
      ++rec.candidates;
      ++rec.hits;
    });
    r.trace.voxels.push_back(rec);
    ++r.trace.query_batches;
  }
  return r;
}

InOutMap transpose_map(const InOutMap& map, std::span<const Coordinate> target_coords) {
  if (map.op != OpKind::Gconv2 && map.op != OpKind::Tconv2) {
    throw Error(ErrorCode::MapMismatch, "only kernel-2 stride-2 maps can be transposed");
  }
  InOutMap t;
  t.op = map.op == OpKind::Gconv2 ? OpKind::Tconv2 : OpKind::Gconv2;
  t.out_coords.assign(target_coords.begin(), target_coords.end());
  t.entries.reserve(map.entries.size());
  for (std::size_t i = 0; i < map.entries.size(); ++i) {
    const MapEntry& e = map.entries[i];
    if (e.in >= target_coords.size() || e.out >= map.out_coords.size() ||
        e.kernel_offset_id >= 8) {
      throw Error(ErrorCode::MapMismatch, "map entry " + std::to_string(i) +
                                              " does not index the supplied coordinates");
    }
    const Offset d = offset_from_id(e.kernel_offset_id, 2);
    // Gconv2: target is the fine input; Tconv2: target is the coarse input.
    const Coordinate coarse = map.op == OpKind::Gconv2 ? map.out_coords[e.out] : target_coords[e.in];
    const Coordinate fine = map.op == OpKind::Gconv2 ? target_coords[e.in] : map.out_coords[e.out];
    if (long{fine.x} != 2L * coarse.x + d.dx || long{fine.y} != 2L * coarse.y + d.dy ||
        long{fine.z} != 2L * coarse.z + d.dz) {
      throw Error(ErrorCode::MapMismatch, "map entry " + std::to_string(i) +
                                              " disagrees with the supplied coordinates");
    }
    t.entries.push_back(MapEntry{e.out, e.in, e.kernel_offset_id});
  }
  return t;
}

SearchTrace reload_trace(const InOutMap& tconv_map, std::size_t input_count) {
  SearchTrace trace;
  trace.op = OpKind::Tconv2;
  const auto& entries = tconv_map.entries;
  std::size_t i = 0;
  while (i < entries.size()) {
    const std::uint32_t in = entries[i].in;
    if (in >= input_count) {
      throw Error(ErrorCode::MapInconsistent, "reloaded map references a missing input row");
    }
    VoxelQueryRecord rec;
    rec.voxel = in;
    std::size_t j = i;
    while (j < entries.size() && entries[j].in == in && j - i < 255) ++j;
    rec.hits = static_cast<std::uint8_t>(j - i);
    trace.voxels.push_back(rec);
    i = j;
  }
  return trace;
}

InOutMap search_bruteforce(std::span<const Coordinate> coords, OpKind op,
                           std::span<const Coordinate> tconv_targets) {
  check_unique(coords);
  InOutMap m;
  m.op = op;
  const SortedIndex index(coords);
  const auto offsets = kernel_offsets(kernel_size(op));

  switch (op) {
    case OpKind::Subm3:
      m.out_coords.assign(coords.begin(), coords.end());
      for (std::size_t o = 0; o < coords.size(); ++o) {
        for (std::size_t k = 0; k < offsets.size(); ++k) {
          const auto t = shifted(coords[o], offsets[k].dx, offsets[k].dy, offsets[k].dz);
          if (!t) continue;
          if (const auto in = index.find(*t)) {
            m.entries.push_back(MapEntry{*in, static_cast<std::uint32_t>(o), static_cast<std::uint8_t>(k)});
          }
        }
      }
      break;
    case OpKind::Gconv3:
    case OpKind::Gconv2: {
      // Every site whose window could cover an input, then check all taps.
      std::vector<Coordinate> candidates;
      for (const Coordinate c : coords) {
        for (const Offset d : offsets) {
          const long x = long{c.x} - d.dx, y = long{c.y} - d.dy, z = long{c.z} - d.dz;
          if (x < 0 || y < 0 || z < 0) continue;
          candidates.push_back(Coordinate{static_cast<std::uint16_t>(x >> 1),
                                          static_cast<std::uint16_t>(y >> 1),
                                          static_cast<std::uint16_t>(z >> 1)});
        }
      }
      for (const Coordinate s : sorted_morton(std::move(candidates))) {
        const auto out = static_cast<std::uint32_t>(m.out_coords.size());
        bool any = false;
        for (std::size_t k = 0; k < offsets.size(); ++k) {
          const auto t = shifted(Coordinate{}, 2L * s.x + offsets[k].dx, 2L * s.y + offsets[k].dy,
                                 2L * s.z + offsets[k].dz);
          if (!t) continue;
          if (const auto in = index.find(*t)) {
            m.entries.push_back(MapEntry{*in, out, static_cast<std::uint8_t>(k)});
            any = true;
          }
        }
        if (any) m.out_coords.push_back(s);
      }
      break;
    }
    case OpKind::Tconv2:
      m.out_coords.assign(tconv_targets.begin(), tconv_targets.end());
      for (std::size_t o = 0; o < tconv_targets.size(); ++o) {
        const Coordinate f = tconv_targets[o];
        for (std::size_t k = 0; k < offsets.size(); ++k) {
          const long x = long{f.x} - offsets[k].dx, y = long{f.y} - offsets[k].dy,
                     z = long{f.z} - offsets[k].dz;
          if (x < 0 || y < 0 || z < 0 || (x & 1) || (y & 1) || (z & 1)) continue;
          const Coordinate coarse{static_cast<std::uint16_t>(x / 2), static_cast<std::uint16_t>(y / 2),
                                  static_cast<std::uint16_t>(z / 2)};
          if (const auto in = index.find(coarse)) {
            m.entries.push_back(MapEntry{*in, static_cast<std::uint32_t>(o), static_cast<std::uint8_t>(k)});
          }
        }
      }
      break;
  }
  std::sort(m.entries.begin(), m.entries.end(), [](const MapEntry& a, const MapEntry& b) {
    return std::tie(a.out, a.kernel_offset_id, a.in) < std::tie(b.out, b.kernel_offset_id, b.in);
  });
  return m;
}

namespace {

// Open-addressing table with linear probing over packed coordinates.
class CoordHashTable {
 public:
  explicit CoordHashTable(std::size_t expected) {
    const std::size_t cap = std::max<std::size_t>(16, std::bit_ceil(std::max<std::size_t>(1, 2 * expected)));
    keys_.assign(cap, kEmptyKey);
    values_.assign(cap, 0);
    mask_ = cap - 1;
  }

  // Returns (value, inserted, probes).
  std::tuple<std::uint32_t, bool, std::uint32_t> find_or_insert(Coordinate c, std::uint32_t value) {
    const std::uint64_t key = pack_coordinate(c);
    std::uint32_t probes = 0;
    for (std::size_t s = hash(key) & mask_;; s = (s + 1) & mask_) {
      ++probes;
      if (keys_[s] == key) return {values_[s], false, probes};
      if (keys_[s] == kEmptyKey) {
        keys_[s] = key;
        values_[s] = value;
        return {value, true, probes};
      }
    }
  }

  std::pair<std::optional<std::uint32_t>, std::uint32_t> find(Coordinate c) const {
    const std::uint64_t key = pack_coordinate(c);
    std::uint32_t probes = 0;
    for (std::size_t s = hash(key) & mask_;; s = (s + 1) & mask_) {
      ++probes;
      if (keys_[s] == key) return {values_[s], probes};
      if (keys_[s] == kEmptyKey) return {std::nullopt, probes};
    }
  }

 private:
  static constexpr std::uint64_t kEmptyKey = ~std::uint64_t{0};

  static std::uint64_t hash(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::vector<std::uint64_t> keys_;
  std::vector<std::uint32_t> values_;
  std::size_t mask_ = 0;
};

}  // namespace

SearchResult search_hash(std::span<const Coordinate> coords, OpKind op) {
  if (op == OpKind::Tconv2) {
    throw Error(ErrorCode::UnsupportedOp, "hash baseline does not search tconv2 maps");
  }
  check_unique(coords);
  SearchResult r;
  r.map.op = op;
  r.trace.op = op;
  const auto offsets = kernel_offsets(kernel_size(op));
  r.trace.voxels.reserve(coords.size());
  r.trace.hash_probes.reserve(coords.size());

  if (op == OpKind::Subm3) {
    r.map.out_coords.assign(coords.begin(), coords.end());
    CoordHashTable table(coords.size());
    for (std::size_t v = 0; v < coords.size(); ++v) {
      r.trace.hash_insert_probes += std::get<2>(table.find_or_insert(coords[v], static_cast<std::uint32_t>(v)));
    }
    for (std::size_t o = 0; o < coords.size(); ++o) {
      VoxelQueryRecord rec;
      rec.voxel = static_cast<std::uint32_t>(o);
      std::uint32_t probes = 0;
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        const auto t = shifted(coords[o], offsets[k].dx, offsets[k].dy, offsets[k].dz);
        if (!t) continue;
        ++rec.candidates;
        const auto [hit, p] = table.find(*t);
        probes += p;
        if (hit) {
          r.map.entries.push_back(MapEntry{*hit, static_cast<std::uint32_t>(o), static_cast<std::uint8_t>(k)});
          ++rec.hits;
        }
      }
      rec.query_cycles = rec.candidates;
      r.trace.voxels.push_back(rec);
      r.trace.hash_probes.push_back(probes);
      r.trace.query_batches += rec.candidates;
    }
    return r;
  }

  // Downsampling: each input inserts or finds its output sites in a hashed
  // output table; output rows appear in first-touch order.
  CoordHashTable sites(coords.size() * (op == OpKind::Gconv3 ? 8 : 1));
  for (std::size_t v = 0; v < coords.size(); ++v) {
    VoxelQueryRecord rec;
    rec.voxel = static_cast<std::uint32_t>(v);
    std::uint32_t probes = 0;
    auto emit = [&](Coordinate s, std::uint8_t k) {
      ++rec.candidates;
      const auto [out, inserted, p] =
          sites.find_or_insert(s, static_cast<std::uint32_t>(r.map.out_coords.size()));
      probes += p;
      if (inserted) r.map.out_coords.push_back(s);
      r.map.entries.push_back(MapEntry{static_cast<std::uint32_t>(v), out, k});
      ++rec.hits;
    };
    const Coordinate c = coords[v];
    if (op == OpKind::Gconv2) {
      emit(Coordinate{static_cast<std::uint16_t>(c.x >> 1), static_cast<std::uint16_t>(c.y >> 1),
                      static_cast<std::uint16_t>(c.z >> 1)},
           static_cast<std::uint8_t>(((c.z & 1) << 2) | ((c.y & 1) << 1) | (c.x & 1)));
    } else {
      for_each_gconv3_site(c, offsets, emit);
    }
    rec.query_cycles = rec.candidates;
    r.trace.voxels.push_back(rec);
    r.trace.hash_probes.push_back(probes);
    r.trace.query_batches += rec.candidates;
  }
  return r;
}

}  // namespace spocta
