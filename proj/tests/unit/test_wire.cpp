#include <doctest.h>
#include <httplib.h>

#include "mmgraph/embedding.hpp"
#include "mmgraph/errors.hpp"
#include "mmgraph/extraction.hpp"
#include "mmgraph/generation.hpp"

#include <json.hpp>

#include <string>
#include <thread>

using namespace mmgraph;
using json = nlohmann::json;

namespace {

// One in-process provider speaking all three wire protocols. `mode` switches
// between healthy, HTTP-500, and non-JSON responses.
struct WireServer {
    httplib::Server server;
    std::thread runner;
    int port = 0;
    std::string mode = "ok";
    json last_extract;
    json last_embed;
    json last_generate;

    WireServer() {
        server.Post("/extract", [this](const httplib::Request& req, httplib::Response& res) {
            last_extract = json::parse(req.body);
            if (!healthy(res))
                return;
            json body;
            if (last_extract.at("task") == "triplets") {
                body["triplets"] = json::array();
                body["triplets"].push_back(json::array({"Alpha Corp", "acquired", "Beta Labs"}));
            } else {
                body["entities"] = json::array({"Alpha Corp", "Beta Labs"});
            }
            res.set_content(body.dump(), "application/json");
        });
        server.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            last_embed = json::parse(req.body);
            if (!healthy(res))
                return;
            json body;
            body["vector"] = last_embed.at("payload") == "short" ? json::array({1.0, 0.0})
                                                                 : json::array({0.0, 1.0, 0.0});
            res.set_content(body.dump(), "application/json");
        });
        server.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
            last_generate = json::parse(req.body);
            if (!healthy(res))
                return;
            res.set_content(json{{"text", "(B) is generated"}}.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        runner = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~WireServer() {
        server.stop();
        runner.join();
    }

    bool healthy(httplib::Response& res) {
        if (mode == "http500") {
            res.status = 500;
            return false;
        }
        if (mode == "garbage") {
            res.set_content("definitely { not json", "text/plain");
            return false;
        }
        return true;
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

} // namespace

TEST_CASE("remote providers speak the documented wire protocols") {
    WireServer wire;

    SUBCASE("extraction posts task and text") {
        RemoteExtractionProvider provider(wire.url());
        auto triplets = provider.triplets("Alpha Corp acquired Beta Labs.");
        REQUIRE(triplets.size() == 1);
        CHECK(triplets[0].subject == "Alpha Corp");
        CHECK(triplets[0].relation == "acquired");
        CHECK(triplets[0].object == "Beta Labs");
        CHECK(wire.last_extract["task"] == "triplets");
        CHECK(wire.last_extract["text"] == "Alpha Corp acquired Beta Labs.");

        auto entities = provider.entities("Who runs Alpha Corp?");
        CHECK(entities == std::vector<std::string>{"Alpha Corp", "Beta Labs"});
        CHECK(wire.last_extract["task"] == "entities");
    }

    SUBCASE("embedding posts modality and payload and normalizes the result") {
        RemoteEmbedder embedder(wire.url());
        auto v = embedder.embed_text("anything");
        REQUIRE(v.size() == 3);
        CHECK(v[1] == doctest::Approx(1.0));
        CHECK(wire.last_embed["modality"] == "text");
        CHECK(wire.last_embed["payload"] == "anything");

        embedder.embed_image("picture bytes");
        CHECK(wire.last_embed["modality"] == "image");

        SUBCASE("a dimension change is a provider error") {
            CHECK_THROWS_AS(embedder.embed_text("short"), ProviderError);
        }
    }

    SUBCASE("generation forwards the rendered prompt, images, and temperature") {
        RemoteLMMClient client(wire.url(), 0.0);
        Prompt prompt;
        prompt.system = "Answer carefully.";
        prompt.context = "Alpha Corp acquired Beta Labs";
        prompt.images = {"img_a", "img_b"};
        prompt.question = "Who acquired Beta Labs?";
        prompt.choices = {"(A) Alpha Corp", "(B) Gamma Inc"};
        CHECK(client.generate(prompt) == "(B) is generated");
        CHECK(wire.last_generate["temperature"] == 0.0);
        CHECK(wire.last_generate["images"] == json::array({"img_a", "img_b"}));
        std::string sent = wire.last_generate["prompt"].get<std::string>();
        CHECK(sent == render_prompt(prompt));
        CHECK(sent.find("Question: Who acquired Beta Labs?") != std::string::npos);

        RemoteLMMClient warm(wire.url(), 0.7);
        warm.generate(prompt);
        CHECK(wire.last_generate["temperature"] == 0.7);
    }

    SUBCASE("http errors surface as provider errors") {
        wire.mode = "http500";
        RemoteExtractionProvider provider(wire.url());
        CHECK_THROWS_AS(provider.triplets("x"), ProviderError);
        RemoteEmbedder embedder(wire.url());
        CHECK_THROWS_AS(embedder.embed_text("x"), ProviderError);
        RemoteLMMClient client(wire.url());
        CHECK_THROWS_AS(client.generate(Prompt{}), ProviderError);
    }

    SUBCASE("non-json bodies surface as provider errors") {
        wire.mode = "garbage";
        RemoteExtractionProvider provider(wire.url());
        CHECK_THROWS_AS(provider.entities("x"), ProviderError);
        RemoteEmbedder embedder(wire.url());
        CHECK_THROWS_AS(embedder.embed_image("x"), ProviderError);
        RemoteLMMClient client(wire.url());
        CHECK_THROWS_AS(client.generate(Prompt{}), ProviderError);
    }
}
