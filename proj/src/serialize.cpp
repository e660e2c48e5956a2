#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "neuram/network.hpp"
#include "neuram/neuram.hpp"

using nlohmann::json;

namespace neuram::nn {

namespace {

json network_to_json(const Network& net) {
    json j;
    j["layer_sizes"] = net.layer_sizes;
    j["activation"] = "tanh";
    if (net.transform == OutputTransform::box_squash) {
        j["output_transform"] = {{"kind", "box_squash"}, {"lo", net.box_lo}, {"hi", net.box_hi}};
    } else {
        j["output_transform"] = {{"kind", "identity"}};
    }
    j["weights"] = net.weights;
    return j;
}

Network network_from_json(const json& j) {
    Network net;
    net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (j.at("activation").get<std::string>() != "tanh")
        throw std::runtime_error("network: unsupported activation tag");
    const json& tr = j.at("output_transform");
    std::string kind = tr.at("kind").get<std::string>();
    if (kind == "box_squash") {
        net.transform = OutputTransform::box_squash;
        net.box_lo = tr.at("lo").get<Vec>();
        net.box_hi = tr.at("hi").get<Vec>();
    } else if (kind == "identity") {
        net.transform = OutputTransform::identity;
    } else {
        throw std::runtime_error("network: unknown output transform '" + kind + "'");
    }
    net.weights = j.at("weights").get<Vec>();
    net.validate();
    return net;
}

}  // namespace

std::string to_json_string(const Network& net) { return network_to_json(net).dump(2); }

Network network_from_json_string(const std::string& text) {
    return network_from_json(json::parse(text));
}

}  // namespace neuram::nn

namespace neuram {

namespace {

json arch_to_json(const Arch& a) { return {{"hidden_layers", a.hidden_layers}, {"width", a.width}}; }

Arch arch_from_json(const json& j) {
    return Arch{j.at("hidden_layers").get<int>(), j.at("width").get<int>()};
}

json artifact_to_json(const NeurAMArtifact& art) {
    json j;
    j["model_name"] = art.model_name;
    j["encoder"] = json::parse(nn::to_json_string(art.encoder));
    j["decoder"] = json::parse(nn::to_json_string(art.decoder));
    j["surrogate"] = json::parse(nn::to_json_string(art.surrogate));
    j["latent_interval"] = {art.t_min, art.t_max};
    j["input_normalizer"] = {{"log_scale", art.in_norm.log_scale},
                             {"lo", art.in_norm.lo},
                             {"hi", art.in_norm.hi}};
    j["output_normalizer"] = {{"lo", art.out_norm.lo}, {"hi", art.out_norm.hi}};
    j["training_report"] = {{"loss_total", art.report.loss_total},
                            {"loss_surrogate_manifold", art.report.loss_surrogate_manifold},
                            {"loss_surrogate_direct", art.report.loss_surrogate_direct},
                            {"loss_reconstruction", art.report.loss_reconstruction},
                            {"n_samples", art.report.n_samples},
                            {"seed", art.report.seed},
                            {"encoder_arch", arch_to_json(art.report.encoder_arch)},
                            {"decoder_arch", arch_to_json(art.report.decoder_arch)},
                            {"surrogate_arch", arch_to_json(art.report.surrogate_arch)},
                            {"trials_run", art.report.trials_run}};
    // NaN marks "no hyperparameter search ran"; JSON has no NaN literal
    if (std::isfinite(art.report.validation_loss))
        j["training_report"]["validation_loss"] = art.report.validation_loss;
    else
        j["training_report"]["validation_loss"] = nullptr;
    return j;
}

NeurAMArtifact artifact_from_json(const json& j) {
    NeurAMArtifact art;
    art.model_name = j.at("model_name").get<std::string>();
    art.encoder = nn::network_from_json_string(j.at("encoder").dump());
    art.decoder = nn::network_from_json_string(j.at("decoder").dump());
    art.surrogate = nn::network_from_json_string(j.at("surrogate").dump());
    art.t_min = j.at("latent_interval").at(0).get<double>();
    art.t_max = j.at("latent_interval").at(1).get<double>();
    const json& in = j.at("input_normalizer");
    art.in_norm.log_scale = in.at("log_scale").get<std::vector<std::uint8_t>>();
    art.in_norm.lo = in.at("lo").get<Vec>();
    art.in_norm.hi = in.at("hi").get<Vec>();
    const json& out = j.at("output_normalizer");
    art.out_norm.lo = out.at("lo").get<double>();
    art.out_norm.hi = out.at("hi").get<double>();
    const json& rep = j.at("training_report");
    art.report.loss_total = rep.at("loss_total").get<double>();
    art.report.loss_surrogate_manifold = rep.at("loss_surrogate_manifold").get<double>();
    art.report.loss_surrogate_direct = rep.at("loss_surrogate_direct").get<double>();
    art.report.loss_reconstruction = rep.at("loss_reconstruction").get<double>();
    art.report.n_samples = rep.at("n_samples").get<int>();
    art.report.seed = rep.at("seed").get<std::uint64_t>();
    art.report.encoder_arch = arch_from_json(rep.at("encoder_arch"));
    art.report.decoder_arch = arch_from_json(rep.at("decoder_arch"));
    art.report.surrogate_arch = arch_from_json(rep.at("surrogate_arch"));
    art.report.validation_loss = rep.at("validation_loss").is_null()
                                     ? std::numeric_limits<double>::quiet_NaN()
                                     : rep.at("validation_loss").get<double>();
    art.report.trials_run = rep.at("trials_run").get<int>();
    return art;
}

}  // namespace

std::string to_json_string(const NeurAMArtifact& artifact) {
    return artifact_to_json(artifact).dump(2);
}

NeurAMArtifact artifact_from_json_string(const std::string& text) {
    return artifact_from_json(json::parse(text));
}

void save_artifact(const NeurAMArtifact& artifact, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_artifact: cannot open '" + path + "'");
    out << to_json_string(artifact) << '\n';
}

NeurAMArtifact load_artifact(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_artifact: cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return artifact_from_json_string(text);
}

}  // namespace neuram
