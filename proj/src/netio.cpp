#include "netio.hpp"

#include <fstream>
#include <iterator>

namespace hcrep::cli {

namespace {

std::size_t group_bytes(std::int64_t m) { return static_cast<std::size_t>((m + 7) / 8); }

int groups(const LayeredNetwork& net) { return net.k() + (net.topology() == Topology::Lateral ? 1 : 0); }

void pack(std::span<const Word> blk, std::int64_t m, std::vector<std::uint8_t>& out) {
  const std::size_t start = out.size();
  out.resize(start + group_bytes(m), 0);
  for (std::int64_t i = 0; i < m; ++i)
    if (test_bit(blk, static_cast<std::size_t>(i))) out[start + static_cast<std::size_t>(i / 8)] |= std::uint8_t(1u << (i % 8));
}

void unpack(const std::uint8_t* src, std::int64_t m, std::span<Word> blk) {
  std::fill(blk.begin(), blk.end(), Word{0});
  for (std::int64_t i = 0; i < m; ++i)
    if ((src[i / 8] >> (i % 8)) & 1u) set_bit(blk, static_cast<std::size_t>(i));
}

Ratio ratio_of(const json& j, const char* what) {
  if (!j.is_string()) throw ConfigError(std::string("network dump: '") + what + "' must be a ratio string");
  return Ratio::parse(j.get<std::string>());
}

ReprKind kind_of(const std::string& s) {
  for (const auto k : {ReprKind::HighFF, ReprKind::LowFF, ReprKind::Lateral})
    if (s == to_string(k)) return k;
  throw ConfigError("network dump: unknown kind '" + s + "'");
}

}  // namespace

std::vector<std::uint8_t> sidecar_bytes(const LayeredNetwork& net) {
  std::vector<std::uint8_t> out;
  const bool lateral = net.topology() == Topology::Lateral;
  for (const ConceptId& c : net.wired_concepts())
    for (std::int64_t j = 0; j < net.m(); ++j) {
      for (int g = 0; g < net.k(); ++g) pack(net.ff_block(c, j, g), net.m(), out);
      if (lateral) pack(net.lat_block(c, j), net.m(), out);
    }
  return out;
}

json network_summary(const LayeredNetwork& net) {
  const auto& hp = net.hierarchy().params();
  const auto& cp = net.params();
  const bool lateral = net.topology() == Topology::Lateral;
  json j;
  j["format"] = kDumpFormat;
  j["hierarchy"] = {{"k", hp.k}, {"l_max", hp.l_max}, {"n", hp.n}};
  j["layer_concepts"] = net.layout(0).width / net.m();
  j["common"] = {{"m", cp.m}, {"q", ratio_json(cp.q)}, {"zeta", ratio_json(cp.zeta)}, {"r1", ratio_json(cp.r1)},
                 {"r2", ratio_json(cp.r2)}};
  j["kind"] = to_string(net.kind());
  j["topology"] = to_string(net.topology());
  j["scope"] = net.scope() ? concept_json(*net.scope()) : json(nullptr);
  if (const auto& cn = net.connectivity())
    j["connectivity"] = {{"a", ratio_json(cn->a)}, {"a1", ratio_json(cn->a1)}, {"a2", ratio_json(cn->a2)},
                         {"m1", cn->m1}, {"m2", cn->m2}};
  else
    j["connectivity"] = nullptr;
  j["tau"] = ratio_json(net.tau());
  j["learn_tau"] = ratio_json(net.learn_tau());
  j["build"] = {{"sampling", net.build_info().sampling}, {"seed", net.build_info().seed},
                {"rejections", net.build_info().rejections}};
  json concepts = json::array();
  for (const ConceptId& c : net.wired_concepts()) {
    json reps = json::array(), cls = json::array(), child = json::array(), lat = json::array();
    for (std::int64_t r = 0; r < net.m(); ++r) {
      reps.push_back(net.rep(c, r).index);
      cls.push_back(net.declared_class(c, r));
      json row = json::array();
      for (int g = 0; g < net.k(); ++g) row.push_back(popcount(net.ff_block(c, r, g)));
      child.push_back(row);
      if (lateral) lat.push_back(popcount(net.lat_block(c, r)));
    }
    json e = {{"concept", concept_json(c)}, {"reps", reps}, {"declared_class", cls}, {"child_in_degree", child}};
    if (lateral) e["lateral_in_degree"] = lat;
    concepts.push_back(std::move(e));
  }
  j["concepts"] = std::move(concepts);
  j["sidecar"] = {{"layout", "per wired concept, per rep, groups 0..k-1 then lateral; ceil(m/8) bytes per group, "
                             "little-endian bit order"},
                  {"group_bytes", group_bytes(net.m())},
                  {"groups_per_rep", groups(net)},
                  {"bytes", group_bytes(net.m()) * static_cast<std::size_t>(groups(net) * net.m()) *
                                net.wired_concepts().size()}};
  return j;
}

void save_network(const LayeredNetwork& net, const std::string& path) {
  std::ofstream js(path);
  if (!js) throw std::runtime_error("cannot write '" + path + "'");
  js << network_summary(net).dump(1) << '\n';
  const auto bytes = sidecar_bytes(net);
  std::ofstream bin(path + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write '" + path + ".bin'");
  bin.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::shared_ptr<const LayeredNetwork> load_network(const std::string& path) {
  const json j = load_json_file(path);
  try {
    if (j.value("format", "") != kDumpFormat) throw ConfigError("network dump: '" + path + "' has no " + kDumpFormat + " tag");
    const auto& hj = j.at("hierarchy");
    const HierarchyParams hp{hj.at("k").get<int>(), hj.at("l_max").get<int>(), hj.at("n").get<std::int64_t>()};
    const auto h = std::make_shared<const ConceptHierarchy>(hp);
    const auto& cj = j.at("common");
    CommonParams cp;
    cp.k = hp.k;
    cp.l_max = hp.l_max;
    cp.m = cj.at("m").get<std::int64_t>();
    cp.q = ratio_of(cj.at("q"), "q");
    cp.zeta = ratio_of(cj.at("zeta"), "zeta");
    cp.r1 = ratio_of(cj.at("r1"), "r1");
    cp.r2 = ratio_of(cj.at("r2"), "r2");
    std::optional<ConceptId> scope;
    if (!j.at("scope").is_null()) scope = ConceptId{j["scope"][0].get<int>(), j["scope"][1].get<std::int64_t>()};
    auto net = std::make_shared<LayeredNetwork>(h, cp, kind_of(j.at("kind").get<std::string>()), scope,
                                                j.at("layer_concepts").get<std::int64_t>());
    if (const auto& cn = j.at("connectivity"); !cn.is_null())
      net->set_connectivity({ratio_of(cn.at("a"), "a"), ratio_of(cn.at("a1"), "a1"), ratio_of(cn.at("a2"), "a2"),
                             cn.at("m1").get<std::int64_t>(), cn.at("m2").get<std::int64_t>()});
    net->set_tau(ratio_of(j.at("tau"), "tau"));
    net->set_learn_tau(ratio_of(j.at("learn_tau"), "learn_tau"));
    const auto& bj = j.at("build");
    net->build_info() = {bj.at("sampling").get<std::string>(), bj.at("seed").get<std::uint64_t>(),
                         bj.at("rejections").get<std::int64_t>()};

    std::ifstream bin(path + ".bin", std::ios::binary);
    if (!bin) throw ConfigError("network dump: missing sidecar '" + path + ".bin'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    const std::size_t gb = group_bytes(cp.m);
    const std::size_t need = gb * static_cast<std::size_t>(groups(*net) * cp.m) * net->wired_concepts().size();
    if (bytes.size() != need)
      throw ConfigError("network dump: sidecar has " + std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(need));
    const bool lateral = net->topology() == Topology::Lateral;
    const auto& concepts = j.at("concepts");
    if (concepts.size() != net->wired_concepts().size()) throw ConfigError("network dump: concept list does not match scope");
    std::size_t off = 0;
    for (std::size_t s = 0; s < net->wired_concepts().size(); ++s) {
      const ConceptId c = net->wired_concepts()[s];
      const auto& e = concepts[s];
      if (e.at("concept")[0].get<int>() != c.level || e.at("concept")[1].get<std::int64_t>() != c.index)
        throw ConfigError("network dump: concepts out of order at " + c.str());
      for (std::int64_t r = 0; r < cp.m; ++r) {
        for (int g = 0; g < cp.k; ++g, off += gb) {
          unpack(bytes.data() + off, cp.m, net->ff_block(c, r, g));
          if (static_cast<std::int64_t>(popcount(net->ff_block(c, r, g))) != e.at("child_in_degree")[r][g].get<std::int64_t>())
            throw ConfigError("network dump: in-degree mismatch at " + c.str());
        }
        if (lateral) {
          unpack(bytes.data() + off, cp.m, net->lat_block(c, r));
          off += gb;
          if (static_cast<std::int64_t>(popcount(net->lat_block(c, r))) != e.at("lateral_in_degree")[r].get<std::int64_t>())
            throw ConfigError("network dump: lateral in-degree mismatch at " + c.str());
        }
        net->set_declared_class(c, r, e.at("declared_class")[r].get<int>());
      }
    }
    return net;
  } catch (const json::exception& e) {
    throw ConfigError("network dump '" + path + "': " + e.what());
  }
}

}  // namespace hcrep::cli
