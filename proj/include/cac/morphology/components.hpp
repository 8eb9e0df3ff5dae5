#pragma once

// Connected-component labelling of binary masks: one raster pass that
// unions each foreground voxel with its already-visited neighbours, then a
// second pass that assigns dense labels in order of first encounter.

#include <numeric>

#include "cac/volume.hpp"

namespace cac {

enum class Connectivity : int { Six = 6, Eighteen = 18, TwentySix = 26 };

inline Connectivity connectivity_from_int(int c) {
    if (c != 6 && c != 18 && c != 26) {
        throw InvalidInput("connectivity must be 6, 18 or 26, got " + std::to_string(c));
    }
    return static_cast<Connectivity>(c);
}

struct ComponentSet {
    Volume<std::uint32_t> labels;   // 0 = background, 1..count
    std::uint32_t count = 0;
    std::vector<std::size_t> sizes;  // sizes[k] = voxel count of label k+1
};

namespace detail {

class UnionFind {
  public:
    std::uint32_t make() {
        parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
        return parent_.back();
    }
    std::uint32_t find(std::uint32_t a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            if (a < b) {
                parent_[b] = a;
            } else {
                parent_[a] = b;
            }
        }
    }

  private:
    std::vector<std::uint32_t> parent_;
};

}  // namespace detail

template <class T>
ComponentSet connected_components(const Volume<T>& mask, Connectivity connectivity = Connectivity::TwentySix) {
    require_binary(mask, "connected_components input");
    const auto& d = mask.dims();
    const Grid3& g = mask.grid();

    // Neighbours that precede the current voxel in x-fastest scan order.
    std::vector<Index3> back;
    for (const auto& o : neighbor_offsets(static_cast<int>(connectivity))) {
        if (o.z < 0 || (o.z == 0 && (o.y < 0 || (o.y == 0 && o.x < 0)))) {
            back.push_back(o);
        }
    }

    Volume<std::uint32_t> provisional(g, 0u);
    detail::UnionFind uf;
    uf.make();  // slot 0 = background
    std::size_t i = 0;
    for (int z = 0; z < d.z; ++z) {
        for (int y = 0; y < d.y; ++y) {
            for (int x = 0; x < d.x; ++x, ++i) {
                if (mask[i] == T{0}) {
                    continue;
                }
                std::uint32_t label = 0;
                for (const auto& o : back) {
                    const Index3 n{x + o.x, y + o.y, z + o.z};
                    if (!g.contains(n)) {
                        continue;
                    }
                    const std::uint32_t nl = provisional.at(n);
                    if (nl == 0) {
                        continue;
                    }
                    if (label == 0) {
                        label = nl;
                    } else if (nl != label) {
                        uf.unite(label, nl);
                    }
                }
                provisional[i] = label != 0 ? label : uf.make();
            }
        }
    }

    ComponentSet out{Volume<std::uint32_t>(g, 0u), 0, {}};
    std::vector<std::uint32_t> remap;
    for (std::size_t k = 0; k < provisional.size(); ++k) {
        const std::uint32_t p = provisional[k];
        if (p == 0) {
            continue;
        }
        const std::uint32_t root = uf.find(p);
        if (remap.size() <= root) {
            remap.resize(static_cast<std::size_t>(root) + 1, 0);
        }
        if (remap[root] == 0) {
            remap[root] = ++out.count;
            out.sizes.push_back(0);
        }
        out.labels[k] = remap[root];
        ++out.sizes[remap[root] - 1];
    }
    return out;
}

/// Voxel lists per component (index k holds label k+1), each in scan order.
inline std::vector<std::vector<Index3>> component_voxels(const ComponentSet& cs) {
    std::vector<std::vector<Index3>> out(cs.count);
    for (std::uint32_t k = 0; k < cs.count; ++k) {
        out[k].reserve(cs.sizes[k]);
    }
    const Grid3& g = cs.labels.grid();
    for (std::size_t i = 0; i < cs.labels.size(); ++i) {
        if (const auto l = cs.labels[i]; l != 0) {
            out[l - 1].push_back(g.index(i));
        }
    }
    return out;
}

/// Mask of the components whose label satisfies `keep(label)`.
template <class Pred>
MaskVolume select_components(const ComponentSet& cs, Pred keep) {
    MaskVolume out(cs.labels.grid(), 0);
    std::vector<char> flag(static_cast<std::size_t>(cs.count) + 1, 0);
    for (std::uint32_t l = 1; l <= cs.count; ++l) {
        flag[l] = keep(l) ? 1 : 0;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = flag[cs.labels[i]] ? 1 : 0;
    }
    return out;
}

}  // namespace cac
