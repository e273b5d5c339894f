#include "mobench/providers/cost.hpp"

#include <nlohmann/json.hpp>

namespace mobench::providers {

using json = nlohmann::json;

void CostTable::set(const std::string& model_id, Rate rate) {
    if (rate.usd_per_1k_prompt < 0 || rate.usd_per_1k_completion < 0) {
        throw ValidationError({"cost rates for '" + model_id + "' must be non-negative"});
    }
    rates_[model_id] = rate;
}

double CostTable::cost(const Usage& usage, const std::string& model_id) const {
    const auto it = rates_.find(model_id);
    if (it == rates_.end()) throw ConfigError("no cost rates configured for model '" + model_id + "'");
    return static_cast<double>(usage.prompt_tokens) / 1000.0 * it->second.usd_per_1k_prompt +
           static_cast<double>(usage.completion_tokens) / 1000.0 * it->second.usd_per_1k_completion;
}

CostTable CostTable::from_json(const json& j) {
    CostTable table;
    try {
        for (const auto& [model, r] : j.items()) {
            for (const auto& [key, _] : r.items()) {
                if (key != "prompt_per_1k" && key != "completion_per_1k") {
                    throw ConfigError("unknown cost table key '" + key + "' for model '" + model + "'");
                }
            }
            table.set(model, Rate{r.at("prompt_per_1k").get<double>(), r.at("completion_per_1k").get<double>()});
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed cost table: ") + e.what());
    }
    return table;
}

json CostTable::to_json() const {
    json j = json::object();
    for (const auto& [model, r] : rates_) {
        j[model] = {{"prompt_per_1k", r.usd_per_1k_prompt}, {"completion_per_1k", r.usd_per_1k_completion}};
    }
    return j;
}

}  // namespace mobench::providers
