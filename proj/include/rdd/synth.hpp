#pragma once

// Synthetic ground-truthed corpora. Prototypes are smooth great-circle paths
// on the unit sphere; reference demos are clean prototype concatenations and
// test demos concatenate perturbed, time-warped prototype instances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdd/core.hpp"
#include "rdd/error.hpp"

namespace rdd {

struct SynthSpec {
  std::size_t num_prototypes = 5;
  std::size_t dim = 16;
  std::size_t proto_len_min = 8;
  std::size_t proto_len_max = 24;
  std::size_t demos = 20;            // test demonstrations
  std::size_t reference_demos = 20;
  std::size_t segs_min = 3;
  std::size_t segs_max = 6;
  double noise_sigma = 0.0;          // per-coordinate Gaussian, before renormalizing
  double time_warp = 0.0;            // max fractional duration jitter
  std::uint64_t seed = 0;
  std::size_t reciprocating = 0;     // prototypes that return to their start frame
  std::size_t novel_segments = 0;    // per test demo, drawn from prototypes unseen in the reference
  std::size_t twins = 0;             // prototype pairs with identical endpoints, different lengths

  void validate() const {
    require(num_prototypes >= 1, Errc::invalid_argument, "num_prototypes must be >= 1");
    require(dim >= 2, Errc::invalid_argument, "dim must be >= 2");
    require(proto_len_min >= 2, Errc::invalid_argument, "proto_len_min must be >= 2");
    require(proto_len_min <= proto_len_max, Errc::invalid_argument, "empty prototype length range");
    require(segs_min >= 1 && segs_min <= segs_max, Errc::invalid_argument,
            "empty segments-per-demo range");
    require(reference_demos >= 1, Errc::invalid_argument, "need at least one reference demo");
    require(noise_sigma >= 0.0, Errc::invalid_argument, "noise_sigma must be >= 0");
    require(time_warp >= 0.0 && time_warp < 1.0, Errc::invalid_argument,
            "time_warp must be in [0, 1)");
    require(reciprocating <= num_prototypes, Errc::invalid_argument,
            "more reciprocating prototypes than prototypes");
    require(reciprocating == 0 || proto_len_min >= 3, Errc::invalid_argument,
            "reciprocating prototypes need at least 3 frames");
    require(2 * twins <= num_prototypes, Errc::invalid_argument,
            "twins need two prototypes each");
    require(twins == 0 || (proto_len_min >= 3 && proto_len_min < proto_len_max),
            Errc::invalid_argument, "twins need a prototype length range of at least 3..4");
  }
};

inline void to_json(nlohmann::json& j, const SynthSpec& s) {
  j = nlohmann::json{{"format_version", 1},
                     {"num_prototypes", s.num_prototypes},
                     {"dim", s.dim},
                     {"proto_len_range", {s.proto_len_min, s.proto_len_max}},
                     {"demos", s.demos},
                     {"reference_demos", s.reference_demos},
                     {"segs_per_demo_range", {s.segs_min, s.segs_max}},
                     {"noise_sigma", s.noise_sigma},
                     {"time_warp", s.time_warp},
                     {"seed", s.seed},
                     {"reciprocating", s.reciprocating},
                     {"novel_segments", s.novel_segments},
                     {"twins", s.twins}};
}

inline void from_json(const nlohmann::json& j, SynthSpec& s) {
  if (j.contains("format_version") && j.at("format_version").get<int>() != 1) {
    fail(Errc::format, "unsupported synth spec format_version");
  }
  s = SynthSpec{};
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("num_prototypes", s.num_prototypes);
  get("dim", s.dim);
  if (j.contains("proto_len_range")) {
    const auto r = j.at("proto_len_range").get<std::vector<std::size_t>>();
    require(r.size() == 2, Errc::invalid_argument, "proto_len_range needs two values");
    s.proto_len_min = r[0];
    s.proto_len_max = r[1];
  }
  get("demos", s.demos);
  get("reference_demos", s.reference_demos);
  if (j.contains("segs_per_demo_range")) {
    const auto r = j.at("segs_per_demo_range").get<std::vector<std::size_t>>();
    require(r.size() == 2, Errc::invalid_argument, "segs_per_demo_range needs two values");
    s.segs_min = r[0];
    s.segs_max = r[1];
  }
  get("noise_sigma", s.noise_sigma);
  get("time_warp", s.time_warp);
  get("seed", s.seed);
  get("reciprocating", s.reciprocating);
  get("novel_segments", s.novel_segments);
  get("twins", s.twins);
}

struct SegmentRecord {
  std::size_t prototype = 0;  // index into the known (or novel) prototype list
  bool novel = false;
  std::size_t length = 0;
};

struct Corpus {
  std::vector<Demonstration> reference;
  std::vector<Demonstration> test;
  std::vector<std::vector<SegmentRecord>> test_segments;  // generator bookkeeping
};

namespace detail {

struct Prototype {
  std::size_t length = 0;
  std::size_t dim = 0;
  std::vector<float> frames;
};

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(sub),
                    static_cast<std::uint32_t>(sub >> 32)};
  return std::mt19937_64(seq);
}

inline std::vector<double> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : v) {
      x = gauss(rng);
      n2 += x * x;
    }
  } while (n2 < 1e-12);
  const double n = std::sqrt(n2);
  for (auto& x : v) x /= n;
  return v;
}

inline std::vector<double> slerp(const std::vector<double>& a, const std::vector<double>& b,
                                 double t) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  dot = std::clamp(dot, -1.0, 1.0);
  const double omega = std::acos(dot);
  std::vector<double> out(a.size());
  if (omega < 1e-9) {
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1 - t) * a[i] + t * b[i];
  } else {
    const double s = std::sin(omega);
    const double wa = std::sin((1 - t) * omega) / s;
    const double wb = std::sin(t * omega) / s;
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = wa * a[i] + wb * b[i];
  }
  return out;
}

inline void push_frame(std::vector<float>& dst, const std::vector<double>& v) {
  const std::size_t start = dst.size();
  for (double x : v) dst.push_back(static_cast<float>(x));
  normalize_in_place(std::span<float>(dst).subspan(start, v.size()));
}

inline Prototype make_prototype(std::size_t dim, std::size_t length, bool reciprocating,
                                std::mt19937_64& rng, const std::vector<double>* anchor = nullptr) {
  Prototype p{length, dim, {}};
  p.frames.reserve(length * dim);
  const auto a = anchor ? *anchor : random_unit(dim, rng);
  const auto b = random_unit(dim, rng);
  for (std::size_t k = 0; k < length; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(length - 1);
    if (k == 0) {
      push_frame(p.frames, a);
    } else if (k == length - 1) {
      push_frame(p.frames, reciprocating ? a : b);
    } else if (!reciprocating) {
      push_frame(p.frames, slerp(a, b, s));
    } else {
      // Out to b and back to a.
      push_frame(p.frames, s <= 0.5 ? slerp(a, b, 2 * s) : slerp(b, a, 2 * s - 1));
    }
  }
  return p;
}

}  // namespace detail

/// Deterministic per seed: identical specs give identical corpora.
inline Corpus generate_corpus(const SynthSpec& spec) {
  spec.validate();
  std::uniform_int_distribution<std::size_t> proto_len(spec.proto_len_min, spec.proto_len_max);
  std::uniform_int_distribution<std::size_t> seg_count(spec.segs_min, spec.segs_max);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  auto proto_rng = detail::stream(spec.seed, 1);
  std::vector<detail::Prototype> known;
  std::vector<detail::Prototype> novel;
  // Twin pairs leave from and return to one shared anchor frame, so both
  // members have the same endpoint feature and differ only in duration.
  std::vector<double> anchor;
  for (std::size_t p = 0; p < spec.num_prototypes; ++p) {
    if (p < 2 * spec.twins) {
      std::size_t len = proto_len(proto_rng);
      if (p % 2 == 0) {
        anchor = detail::random_unit(spec.dim, proto_rng);
      } else if (len == known.back().length) {
        len = len < spec.proto_len_max ? len + 1 : len - 1;
      }
      known.push_back(detail::make_prototype(spec.dim, len, true, proto_rng, &anchor));
      continue;
    }
    known.push_back(detail::make_prototype(spec.dim, proto_len(proto_rng), p < spec.reciprocating,
                                           proto_rng));
  }
  for (std::size_t p = 0; p < spec.num_prototypes; ++p) {
    novel.push_back(detail::make_prototype(spec.dim, proto_len(proto_rng), false, proto_rng));
  }

  Corpus corpus;

  // Reference: prototypes drawn from reshuffled decks so every one appears.
  auto ref_rng = detail::stream(spec.seed, 2);
  std::vector<std::size_t> deck;
  for (std::size_t r = 0; r < spec.reference_demos; ++r) {
    const std::size_t k = seg_count(ref_rng);
    std::vector<float> frames;
    std::vector<std::size_t> bounds;
    for (std::size_t s = 0; s < k; ++s) {
      if (deck.empty()) {
        deck.resize(known.size());
        for (std::size_t i = 0; i < deck.size(); ++i) deck[i] = i;
        std::shuffle(deck.begin(), deck.end(), ref_rng);
      }
      const auto& p = known[deck.back()];
      deck.pop_back();
      frames.insert(frames.end(), p.frames.begin(), p.frames.end());
      bounds.push_back(frames.size() / spec.dim);
    }
    char id[32];
    std::snprintf(id, sizeof(id), "ref_%04zu", r);
    corpus.reference.emplace_back(id, spec.dim, std::move(frames), std::move(bounds));
  }

  auto test_rng = detail::stream(spec.seed, 3);
  auto novel_rng = detail::stream(spec.seed, 4);
  std::uniform_int_distribution<std::size_t> pick_proto(0, known.size() - 1);
  for (std::size_t t = 0; t < spec.demos; ++t) {
    const std::size_t k = seg_count(test_rng);
    std::vector<SegmentRecord> segs(k);
    std::vector<double> warps(k);
    for (std::size_t s = 0; s < k; ++s) {
      segs[s].prototype = pick_proto(test_rng);
      warps[s] = unit(test_rng) * spec.time_warp;
    }
    if (spec.novel_segments > 0) {
      std::vector<std::size_t> positions(k);
      for (std::size_t i = 0; i < k; ++i) positions[i] = i;
      std::shuffle(positions.begin(), positions.end(), novel_rng);
      for (std::size_t i = 0; i < std::min(spec.novel_segments, k); ++i) {
        segs[positions[i]].novel = true;
        segs[positions[i]].prototype = pick_proto(novel_rng);
      }
    }

    auto noise_rng = detail::stream(spec.seed, 5, t);
    std::normal_distribution<double> gauss(0.0, spec.noise_sigma > 0 ? spec.noise_sigma : 1.0);
    std::vector<float> frames;
    std::vector<std::size_t> bounds;
    for (std::size_t s = 0; s < k; ++s) {
      const auto& p = segs[s].novel ? novel[segs[s].prototype] : known[segs[s].prototype];
      const auto len = std::max<std::size_t>(
          2, static_cast<std::size_t>(std::lround(static_cast<double>(p.length) * (1.0 + warps[s]))));
      segs[s].length = len;
      for (std::size_t f = 0; f < len; ++f) {
        const std::size_t src = static_cast<std::size_t>(std::lround(
            static_cast<double>(f) * static_cast<double>(p.length - 1) / static_cast<double>(len - 1)));
        const auto row = std::span<const float>(p.frames).subspan(src * p.dim, p.dim);
        const std::size_t start = frames.size();
        frames.insert(frames.end(), row.begin(), row.end());
        if (spec.noise_sigma > 0) {
          for (std::size_t c = 0; c < p.dim; ++c) {
            frames[start + c] = static_cast<float>(frames[start + c] + gauss(noise_rng));
          }
          normalize_in_place(std::span<float>(frames).subspan(start, p.dim));
        }
      }
      bounds.push_back(frames.size() / spec.dim);
    }
    char id[32];
    std::snprintf(id, sizeof(id), "test_%04zu", t);
    corpus.test.emplace_back(id, spec.dim, std::move(frames), std::move(bounds));
    corpus.test_segments.push_back(std::move(segs));
  }
  return corpus;
}

}  // namespace rdd
