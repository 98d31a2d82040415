#include <json.hpp>

#include "gyroqfi/errors.hpp"
#include "gyroqfi/rl.hpp"

namespace gyro::rl {

namespace {

using nlohmann::json;

constexpr int kSnapshotVersion = 1;

json mlp_to_json(const nn::Mlp& net) {
  json layers = json::array();
  for (int l = 0; l < net.layer_count(); ++l) {
    const auto w = net.weight(l);
    std::vector<double> flat(w.data(), w.data() + w.size());
    const auto b = net.bias(l);
    layers.push_back({{"in", net.sizes()[l]},
                      {"out", net.sizes()[l + 1]},
                      {"activation", l + 1 == net.layer_count() ? "linear" : "tanh"},
                      {"weights", flat},
                      {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  return layers;
}

nn::Mlp mlp_from_json(const json& layers) {
  std::vector<int> sizes;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l == 0) sizes.push_back(layers[l].at("in").get<int>());
    sizes.push_back(layers[l].at("out").get<int>());
  }
  nn::Mlp net(sizes);
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto w = layers[l].at("weights").get<std::vector<double>>();
    const auto b = layers[l].at("bias").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != sizes[l] * sizes[l + 1] || static_cast<int>(b.size()) != sizes[l + 1])
      throw ConfigError("snapshot layer " + std::to_string(l) + " has inconsistent sizes");
    for (double x : w) net.params()[off++] = x;
    for (double x : b) net.params()[off++] = x;
  }
  return net;
}

}  // namespace

std::string snapshot_to_json(const PolicySnapshot& s) {
  const PpoConfig& c = s.config;
  json j;
  j["format"] = "gyroqfi-policy";
  j["version"] = kSnapshotVersion;
  j["layout"] =
      "layers in forward order; weights row-major (out x in); the actor output is squashed as "
      "mid + half * tanh(x) into [action_low, action_high]";
  j["observation_size"] = s.model.actor.input_size();
  j["action_size"] = s.model.actor.output_size();
  j["action_low"] = s.model.low;
  j["action_high"] = s.model.high;
  j["observation_transform"] =
      "asinh on amplitude, moment and F-bar features; step fraction and previous action raw";
  j["actor"] = mlp_to_json(s.model.actor);
  j["log_std"] = std::vector<double>(s.model.log_std.data(), s.model.log_std.data() + s.model.log_std.size());
  j["critic"] = mlp_to_json(s.model.critic);
  j["ppo"] = {{"clip_epsilon", c.clip_epsilon},   {"value_coeff", c.value_coeff},
              {"entropy_coeff", c.entropy_coeff}, {"discount", c.discount},
              {"gae_lambda", c.gae_lambda},       {"learning_rate", c.learning_rate},
              {"epochs_per_update", c.epochs_per_update}, {"minibatch_size", c.minibatch_size},
              {"rollout_episodes", c.rollout_episodes},   {"hidden_sizes", c.hidden_sizes},
              {"max_grad_norm", c.max_grad_norm},         {"log_std_init", c.log_std_init},
              {"seed", c.seed}};
  j["iterations"] = s.iterations;
  j["reward_scale"] = s.reward_scale;
  j["eval_return"] = s.eval_return;
  return j.dump(1);
}

PolicySnapshot snapshot_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("policy snapshot is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "gyroqfi-policy") throw ConfigError("not a policy snapshot");
  if (j.value("version", 0) != kSnapshotVersion)
    throw ConfigError("unsupported policy snapshot version");
  try {
    PolicySnapshot s;
    const json& p = j.at("ppo");
    PpoConfig& c = s.config;
    c.clip_epsilon = p.at("clip_epsilon");
    c.value_coeff = p.at("value_coeff");
    c.entropy_coeff = p.at("entropy_coeff");
    c.discount = p.at("discount");
    c.gae_lambda = p.at("gae_lambda");
    c.learning_rate = p.at("learning_rate");
    c.epochs_per_update = p.at("epochs_per_update");
    c.minibatch_size = p.at("minibatch_size");
    c.rollout_episodes = p.at("rollout_episodes");
    c.hidden_sizes = p.at("hidden_sizes").get<std::vector<int>>();
    c.max_grad_norm = p.at("max_grad_norm");
    c.log_std_init = p.at("log_std_init");
    c.seed = p.at("seed");
    s.model.actor = mlp_from_json(j.at("actor"));
    s.model.critic = mlp_from_json(j.at("critic"));
    const auto ls = j.at("log_std").get<std::vector<double>>();
    s.model.log_std = Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
    s.model.low = j.at("action_low");
    s.model.high = j.at("action_high");
    s.iterations = j.at("iterations");
    s.reward_scale = j.at("reward_scale");
    s.eval_return = j.at("eval_return");
    if (s.model.log_std.size() != s.model.actor.output_size())
      throw ConfigError("snapshot log_std size does not match the action size");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed policy snapshot: ") + e.what());
  }
}

}  // namespace gyro::rl
