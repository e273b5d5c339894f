#pragma once

#include <map>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "mobench/providers/chat.hpp"

namespace mobench::providers {

struct Rate {
    double usd_per_1k_prompt = 0.0;
    double usd_per_1k_completion = 0.0;
};

class CostTable {
public:
    /// Throws ValidationError on negative rates.
    void set(const std::string& model_id, Rate rate);
    bool contains(const std::string& model_id) const { return rates_.count(model_id) > 0; }
    const std::map<std::string, Rate>& rates() const noexcept { return rates_; }

    /// prompt/1000 * rate_p + completion/1000 * rate_c. Throws ConfigError for
    /// an unknown model.
    double cost(const Usage& usage, const std::string& model_id) const;

    /// {"<model>": {"prompt_per_1k": x, "completion_per_1k": y}, ...}
    static CostTable from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    std::map<std::string, Rate> rates_;
};

}  // namespace mobench::providers
