// Learner checkpoints.
//
// A checkpoint is a text header terminated by the line "end_header", followed
// by little-endian float32 arrays: the six networks in declaration order
// (each layer's row-major weights then biases), then, when the optimizer flag
// is set, the Adam first and second moments of actor, critic1 and critic2 in
// the same parameter order.
//
//   lander-checkpoint
//   format_version 1
//   step <n>
//   updates <n>
//   net <name> <dims, comma separated> <activations, comma separated>   (x6)
//   optimizer_state <0|1>
//   optimizer <name> <adam step>                                         (x3 if present)
//   rng noise <engine state>
//   rng replay <engine state>
//   payload_floats <n>
//   end_header
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lander/common.hpp"
#include "lander/td3.hpp"

namespace lander {

inline constexpr int kCheckpointFormatVersion = 1;

namespace detail {

inline std::string join_dims(const std::vector<int>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s;
}

inline std::string join_activations(const Mlp<float>& net) {
  std::string s;
  for (std::size_t l = 0; l < net.num_layers(); ++l) s += std::string(l ? "," : "") + std::string(to_string(net.activation(l)));
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

inline void append_floats(std::vector<float>& out, const std::vector<float>& v) { out.insert(out.end(), v.begin(), v.end()); }

inline std::vector<float> flatten_moments(const Mlp<float>& shape, const MlpGradients<float>& g) {
  Mlp<float> tmp(shape.layer_dims(), shape.output_activation());
  tmp.weights() = g.weights;
  tmp.biases() = g.biases;
  return tmp.flatten();
}

inline void unflatten_moments(const Mlp<float>& shape, MlpGradients<float>& g, std::span<const float> flat) {
  Mlp<float> tmp(shape.layer_dims(), shape.output_activation());
  tmp.unflatten(flat);
  g.weights = tmp.weights();
  g.biases = tmp.biases();
}

inline std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  return v;
}

}  // namespace detail

struct CheckpointInfo {
  int format_version = kCheckpointFormatVersion;
  long step = 0;
  bool optimizer_state = false;
};

inline void save_checkpoint(const std::string& path, const Td3Learner& learner, long step,
                            bool with_optimizer = true) {
  const std::pair<const char*, const Mlp<float>*> nets[] = {
      {"actor", &learner.actor()},           {"critic1", &learner.critic1()},
      {"critic2", &learner.critic2()},       {"actor_target", &learner.actor_target()},
      {"critic1_target", &learner.critic1_target()}, {"critic2_target", &learner.critic2_target()}};
  const std::pair<const char*, const Adam<float>*> opts[] = {{"actor", &learner.actor_optimizer()},
                                                             {"critic1", &learner.critic1_optimizer()},
                                                             {"critic2", &learner.critic2_optimizer()}};
  const Mlp<float>* opt_shapes[] = {&learner.actor(), &learner.critic1(), &learner.critic2()};

  std::vector<float> payload;
  for (const auto& [name, net] : nets) detail::append_floats(payload, net->flatten());
  if (with_optimizer) {
    for (int i = 0; i < 3; ++i) {
      detail::append_floats(payload, detail::flatten_moments(*opt_shapes[i], opts[i].second->first_moment()));
      detail::append_floats(payload, detail::flatten_moments(*opt_shapes[i], opts[i].second->second_moment()));
    }
  }

  std::ostringstream h;
  h << "lander-checkpoint\n"
    << "format_version " << kCheckpointFormatVersion << "\n"
    << "step " << step << "\n"
    << "updates " << learner.updates() << "\n";
  for (const auto& [name, net] : nets)
    h << "net " << name << " " << detail::join_dims(net->layer_dims()) << " " << detail::join_activations(*net) << "\n";
  h << "optimizer_state " << (with_optimizer ? 1 : 0) << "\n";
  if (with_optimizer)
    for (const auto& [name, opt] : opts) h << "optimizer " << name << " " << opt->steps() << "\n";
  h << "rng noise " << learner.noise_rng() << "\n"
    << "rng replay " << learner.replay_rng() << "\n"
    << "payload_floats " << payload.size() << "\n"
    << "end_header\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  const std::string header = h.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (float f : payload) {
    const std::uint32_t bits = detail::to_little_endian(std::bit_cast<std::uint32_t>(f));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

/// Restores every network (and optimizer/RNG state when present) into
/// `learner`, whose architecture must match the header.
inline CheckpointInfo load_checkpoint(const std::string& path, Td3Learner& learner) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  auto fail = [&](const std::string& what) -> FormatError {
    return FormatError("checkpoint '" + path + "': " + what);
  };

  std::string line;
  if (!std::getline(in, line) || line != "lander-checkpoint") throw fail("missing 'lander-checkpoint' magic line");

  Mlp<float>* nets[] = {&learner.actor(),        &learner.critic1(),        &learner.critic2(),
                        &learner.actor_target(), &learner.critic1_target(), &learner.critic2_target()};
  const char* net_names[] = {"actor", "critic1", "critic2", "actor_target", "critic1_target", "critic2_target"};
  Adam<float>* opts[] = {&learner.actor_optimizer(), &learner.critic1_optimizer(), &learner.critic2_optimizer()};

  CheckpointInfo info;
  long updates = 0;
  std::size_t payload_floats = 0;
  int net_idx = 0;
  int opt_idx = 0;
  std::vector<long> opt_steps;
  std::string noise_state, replay_state;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end_header") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format_version") {
      ls >> info.format_version;
      if (info.format_version != kCheckpointFormatVersion)
        throw fail("unsupported format_version " + std::to_string(info.format_version));
    } else if (key == "step") {
      ls >> info.step;
    } else if (key == "updates") {
      ls >> updates;
    } else if (key == "net") {
      std::string name, dims, acts;
      ls >> name >> dims >> acts;
      if (net_idx >= 6 || name != net_names[net_idx]) throw fail("unexpected net '" + name + "'");
      if (dims != detail::join_dims(nets[net_idx]->layer_dims()))
        throw fail("net " + name + " has dims " + dims + ", learner expects " +
                   detail::join_dims(nets[net_idx]->layer_dims()));
      if (acts != detail::join_activations(*nets[net_idx]))
        throw fail("net " + name + " has activations " + acts);
      ++net_idx;
    } else if (key == "optimizer_state") {
      int flag = 0;
      ls >> flag;
      info.optimizer_state = flag != 0;
    } else if (key == "optimizer") {
      std::string name;
      long steps = 0;
      ls >> name >> steps;
      if (opt_idx >= 3) throw fail("too many optimizer entries");
      opt_steps.push_back(steps);
      ++opt_idx;
    } else if (key == "rng") {
      std::string which;
      ls >> which;
      std::string rest;
      std::getline(ls, rest);
      (which == "noise" ? noise_state : replay_state) = rest;
    } else if (key == "payload_floats") {
      ls >> payload_floats;
    } else {
      throw fail("unknown header key '" + key + "'");
    }
    if (ls.fail()) throw fail("malformed header line '" + line + "'");
  }
  if (!ended) throw fail("header not terminated by end_header");
  if (net_idx != 6) throw fail("expected 6 nets, found " + std::to_string(net_idx));
  if (info.optimizer_state && opt_idx != 3) throw fail("optimizer_state set but optimizer entries missing");

  std::size_t expected = 0;
  for (auto* n : nets) expected += n->parameter_count();
  if (info.optimizer_state)
    expected += 2 * (learner.actor().parameter_count() + learner.critic1().parameter_count() +
                     learner.critic2().parameter_count());
  if (payload_floats != expected)
    throw fail("header declares " + std::to_string(payload_floats) + " floats, architecture needs " +
               std::to_string(expected));

  const auto start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto available = static_cast<std::size_t>(in.tellg() - start);
  in.seekg(start);
  if (available != expected * sizeof(float))
    throw fail("payload has " + std::to_string(available) + " bytes, header declares " +
               std::to_string(expected * sizeof(float)));

  std::vector<float> payload(expected);
  for (float& f : payload) {
    std::uint32_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    f = std::bit_cast<float>(detail::to_little_endian(bits));
  }
  if (!in) throw fail("truncated payload");

  std::span<const float> rest(payload);
  for (auto* n : nets) {
    n->unflatten(rest.first(n->parameter_count()));
    rest = rest.subspan(n->parameter_count());
  }
  if (info.optimizer_state) {
    const Mlp<float>* shapes[] = {&learner.actor(), &learner.critic1(), &learner.critic2()};
    for (int i = 0; i < 3; ++i) {
      const std::size_t c = shapes[i]->parameter_count();
      detail::unflatten_moments(*shapes[i], opts[i]->first_moment(), rest.first(c));
      rest = rest.subspan(c);
      detail::unflatten_moments(*shapes[i], opts[i]->second_moment(), rest.first(c));
      rest = rest.subspan(c);
      opts[i]->set_steps(opt_steps[static_cast<std::size_t>(i)]);
    }
  }
  if (!noise_state.empty()) {
    std::istringstream s(noise_state);
    s >> learner.noise_rng();
    if (s.fail()) throw fail("malformed noise rng state");
  }
  if (!replay_state.empty()) {
    std::istringstream s(replay_state);
    s >> learner.replay_rng();
    if (s.fail()) throw fail("malformed replay rng state");
  }
  learner.set_updates(updates);
  return info;
}

/// Reads only the actor's layer dims from a checkpoint header.
inline std::vector<int> checkpoint_actor_dims(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "lander-checkpoint")
    throw FormatError("checkpoint '" + path + "': missing 'lander-checkpoint' magic line");
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream ls(line);
    std::string key, name, dims;
    ls >> key >> name >> dims;
    if (key == "net" && name == "actor") {
      std::vector<int> out;
      for (const auto& tok : detail::split(dims, ',')) out.push_back(std::stoi(tok));
      return out;
    }
  }
  throw FormatError("checkpoint '" + path + "': no actor net in header");
}

}  // namespace lander
