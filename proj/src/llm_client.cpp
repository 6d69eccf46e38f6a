#include "kgfit/llm_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <json.hpp>
#include <thread>

#include "kgfit/error.hpp"
#include "kgfit/io.hpp"
#include "kgfit/prompts.hpp"
#include "kgfit/rng.hpp"

namespace kgfit {

namespace {

std::string mock_name(std::vector<std::string> entities) {
    if (entities.empty()) {
        return "Empty group";
    }
    std::sort(entities.begin(), entities.end());
    return "Group of " + entities.front() + " (" + std::to_string(entities.size()) + ")";
}

std::string split_answer(const std::vector<std::pair<std::string, std::vector<std::string>>>& groups) {
    std::string out;
    for (const auto& [name, members] : groups) {
        out += "## " + name + "\n";
        for (const auto& e : members) {
            out += "- " + e + "\n";
        }
    }
    return out;
}

std::string refine_answer(const char* action, const std::string& name) {
    return std::string("Action: ") + action + "\nName: " + name + "\n";
}

}  // namespace

MockClient::MockClient(std::string policy) : policy_(std::move(policy)) {
    static const char* kKnown[] = {"never-split", "halve-lexicographic", "always-noupdate",
                                   "merge-biased", "always-leafmerge", "echo"};
    if (policy_.rfind("random:", 0) == 0) {
        try {
            random_seed_ = std::stoull(policy_.substr(7));
        } catch (const std::exception&) {
            throw ConfigError("mock policy random:<seed> needs an integer seed");
        }
        return;
    }
    if (std::find(std::begin(kKnown), std::end(kKnown), policy_) == std::end(kKnown)) {
        throw ConfigError("unknown mock policy '" + policy_ + "'");
    }
}

std::string MockClient::complete(const std::string& prompt) {
    const bool random = policy_.rfind("random:", 0) == 0;
    Rng rng(fork_seed(random_seed_, prompt));
    switch (prompts::kind_of(prompt)) {
        case prompts::Kind::describe: {
            const auto entity = prompts::parse_describe_prompt(prompt);
            return entity + " is a [mock description of " + entity + "]";
        }
        case prompts::Kind::name:
            return "Name: " + mock_name(prompts::parse_entity_list_prompt(prompt)) + "\n";
        case prompts::Kind::split: {
            const auto name = prompts::parse_split_prompt_name(prompt);
            auto entities = prompts::parse_entity_list_prompt(prompt);
            if (policy_ == "halve-lexicographic" && entities.size() >= 2) {
                std::sort(entities.begin(), entities.end());
                const auto mid = static_cast<std::ptrdiff_t>((entities.size() + 1) / 2);
                return split_answer({{name + " A", {entities.begin(), entities.begin() + mid}},
                                     {name + " B", {entities.begin() + mid, entities.end()}}});
            }
            if (random && !entities.empty()) {
                const auto k = 1 + uniform_index(rng, std::min<std::size_t>(5, entities.size()));
                std::vector<std::size_t> order(entities.size());
                for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
                for (std::size_t i = order.size(); i > 1; --i) {
                    std::swap(order[i - 1], order[uniform_index(rng, i)]);
                }
                std::vector<std::pair<std::string, std::vector<std::string>>> groups(k);
                for (std::size_t g = 0; g < k; ++g) {
                    groups[g].first = name + " #" + std::to_string(g + 1);
                }
                for (std::size_t i = 0; i < order.size(); ++i) {
                    const auto g = i < k ? i : uniform_index(rng, k);
                    groups[g].second.push_back(entities[order[i]]);
                }
                return split_answer(groups);
            }
            return split_answer({{name, entities}});
        }
        case prompts::Kind::refine: {
            const auto q = prompts::parse_refine_prompt(prompt);
            auto all = q.a.entities;
            all.insert(all.end(), q.b.entities.begin(), q.b.entities.end());
            const auto name = mock_name(all);
            if (random) {
                static const char* kActions[] = {"NO UPDATE", "PARENT MERGE", "LEAF MERGE",
                                                 "A INCLUDES B", "B INCLUDES A"};
                return refine_answer(kActions[uniform_index(rng, 5)], name);
            }
            if (policy_ == "always-leafmerge" ||
                (policy_ == "merge-biased" && all.size() <= 6)) {
                return refine_answer("LEAF MERGE", name);
            }
            return refine_answer("NO UPDATE", name);
        }
        case prompts::Kind::unknown:
            break;
    }
    throw ClientError("mock backend does not recognise the prompt");
}

std::string replay_key(const std::string& prompt) { return io::sha256_hex(prompt); }

ReplayClient::ReplayClient(const std::filesystem::path& cache_path) {
    const std::string text = io::read_text(cache_path);
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) {
            end = text.size();
        }
        ++line_no;
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            responses_[j.at("key").get<std::string>()] = j.at("response").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(cache_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::string ReplayClient::complete(const std::string& prompt) {
    auto it = responses_.find(replay_key(prompt));
    if (it == responses_.end()) {
        throw CacheMissError("replay cache has no entry for prompt " + replay_key(prompt));
    }
    return it->second;
}

RecordingClient::RecordingClient(std::unique_ptr<ChatClient> inner, std::filesystem::path cache_path)
    : inner_(std::move(inner)), cache_path_(std::move(cache_path)) {}

std::string RecordingClient::complete(const std::string& prompt) {
    std::string response = inner_->complete(prompt);
    nlohmann::ordered_json j;
    j["key"] = replay_key(prompt);
    j["prompt"] = prompt;
    j["response"] = response;
    std::lock_guard lock(mutex_);
    if (cache_path_.has_parent_path()) {
        std::filesystem::create_directories(cache_path_.parent_path());
    }
    std::ofstream f(cache_path_, std::ios::binary | std::ios::app);
    if (!f) {
        throw IoError("cannot append to replay cache " + cache_path_.string());
    }
    f << j.dump() << '\n';
    return response;
}

LiveClient::LiveClient(LiveSettings settings) : settings_(std::move(settings)) {
    if (const char* token = std::getenv(settings_.token_env.c_str())) {
        token_ = token;
    }
}

std::string LiveClient::complete(const std::string& prompt) {
    const auto& url = settings_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must be an absolute http(s) URL: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string base = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    nlohmann::ordered_json body;
    body["model"] = settings_.model;
    body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = 0;
    const std::string payload = body.dump();

    httplib::Client client(base);
    client.set_connection_timeout(settings_.timeout);
    client.set_read_timeout(settings_.timeout);
    client.set_write_timeout(settings_.timeout);
    httplib::Headers headers;
    if (!token_.empty()) {
        headers.emplace("Authorization", "Bearer " + token_);
    }

    auto backoff = settings_.initial_backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= settings_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff = std::min(backoff * 2, settings_.max_backoff);
        }
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ClientError("chat endpoint returned HTTP " + std::to_string(res->status) + ": " +
                              res->body.substr(0, 200));
        }
        try {
            const auto j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ClientError(std::string("malformed chat response: ") + e.what());
        }
    }
    throw ClientError("chat request failed after " + std::to_string(settings_.max_retries + 1) +
                      " attempts (" + last_error + ")");
}

std::unique_ptr<ChatClient> make_client(const std::string& backend, const LiveSettings& live,
                                        const std::filesystem::path& cache_path) {
    std::unique_ptr<ChatClient> client;
    if (backend == "live") {
        client = std::make_unique<LiveClient>(live);
    } else if (backend.rfind("replay:", 0) == 0) {
        client = std::make_unique<ReplayClient>(backend.substr(7));
    } else if (backend.rfind("mock:", 0) == 0) {
        client = std::make_unique<MockClient>(backend.substr(5));
    } else {
        throw ConfigError("unknown backend '" + backend + "' (expected live, replay:<path> or mock:<policy>)");
    }
    if (cache_path.empty()) {
        return client;
    }
    return std::make_unique<RecordingClient>(std::move(client), cache_path);
}

}  // namespace kgfit
