// Python surface: the four pipeline commands plus the PCST solver, plain
// dicts in and out.

#include "mmgraph/commands.hpp"
#include "mmgraph/errors.hpp"
#include "mmgraph/pcst.hpp"
#include "mmgraph/run_config.hpp"

#include <pybind11/pybind11.h>

#include <algorithm>
#include <string>

namespace py = pybind11;
using namespace mmgraph;

namespace {

nlohmann::json to_json(py::handle obj) {
    if (obj.is_none())
        return nullptr;
    if (py::isinstance<py::bool_>(obj))
        return obj.cast<bool>();
    if (py::isinstance<py::int_>(obj))
        return obj.cast<long long>();
    if (py::isinstance<py::float_>(obj))
        return obj.cast<double>();
    if (py::isinstance<py::str>(obj))
        return obj.cast<std::string>();
    if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
        nlohmann::json arr = nlohmann::json::array();
        for (auto item : obj)
            arr.push_back(to_json(item));
        return arr;
    }
    if (py::isinstance<py::dict>(obj)) {
        nlohmann::json map = nlohmann::json::object();
        for (auto item : obj.cast<py::dict>())
            map[item.first.cast<std::string>()] = to_json(item.second);
        return map;
    }
    throw py::type_error("config values must be str, int, float, bool, None, list, or dict");
}

py::object to_py(const nlohmann::ordered_json& j) {
    switch (j.type()) {
    case nlohmann::ordered_json::value_t::null:
        return py::none();
    case nlohmann::ordered_json::value_t::boolean:
        return py::bool_(j.get<bool>());
    case nlohmann::ordered_json::value_t::number_integer:
        return py::int_(j.get<long long>());
    case nlohmann::ordered_json::value_t::number_unsigned:
        return py::int_(j.get<unsigned long long>());
    case nlohmann::ordered_json::value_t::number_float:
        return py::float_(j.get<double>());
    case nlohmann::ordered_json::value_t::string:
        return py::str(j.get<std::string>());
    case nlohmann::ordered_json::value_t::array: {
        py::list out;
        for (const auto& item : j)
            out.append(to_py(item));
        return out;
    }
    case nlohmann::ordered_json::value_t::object: {
        py::dict out;
        for (const auto& [key, value] : j.items())
            out[py::str(key)] = to_py(value);
        return out;
    }
    default:
        throw py::value_error("unexpected JSON value");
    }
}

Settings settings_from(py::dict config, Command command) {
    return resolve_settings(RunConfig::from_json(to_json(config)), command);
}

py::object run_build(py::dict config) {
    return to_py(cmd_build(settings_from(config, Command::Build)));
}

py::object run_query(py::dict config, const std::string& question) {
    return to_py(cmd_query(settings_from(config, Command::Query), question));
}

py::object run_evaluate(py::dict config, const std::string& testset) {
    return to_py(cmd_eval(settings_from(config, Command::Eval), testset));
}

py::object run_anonymize(py::dict config, const std::string& testset, int count) {
    return to_py(cmd_nea(settings_from(config, Command::Nea), testset, count));
}

py::object run_solve_pcst(py::list nodes, py::list edges, py::dict config) {
    PCSTConfig cfg;
    nlohmann::json c = to_json(config);
    cfg.k = c.value("k", cfg.k);
    cfg.edge_cost = c.value("edge_cost", cfg.edge_cost);
    cfg.epsilon = c.value("epsilon", cfg.epsilon);
    cfg.exact_node_limit = c.value("exact_node_limit", cfg.exact_node_limit);

    PrizedGraph graph;
    for (auto item : nodes) {
        nlohmann::json row = to_json(item);
        PrizedNode node;
        node.id = row.at("id").get<std::string>();
        node.prize = row.value("prize", 0.0);
        graph.nodes.push_back(std::move(node));
    }
    for (auto item : edges) {
        nlohmann::json row = to_json(item);
        PrizedEdge edge;
        edge.id = row.at("id").get<std::string>();
        edge.src = row.at("src").get<std::string>();
        edge.dst = row.at("dst").get<std::string>();
        edge.base_cost = row.value("cost", cfg.edge_cost);
        edge.prize = row.value("prize", 0.0);
        edge.effective_cost = std::max(cfg.epsilon, edge.base_cost - edge.prize);
        graph.edges.push_back(std::move(edge));
    }
    auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
    std::sort(graph.nodes.begin(), graph.nodes.end(), by_id);
    std::sort(graph.edges.begin(), graph.edges.end(), by_id);

    PCSTSolution solution = solve_pcst(graph, cfg);
    nlohmann::ordered_json out;
    out["nodes"] = solution.nodes;
    out["edges"] = solution.edges;
    out["objective"] = solution.objective;
    return to_py(out);
}

} // namespace

PYBIND11_MODULE(_mmgraph, m) {
    m.doc() = "Multi-modal graph retrieval engine";
    m.attr("__version__") = MMGRAPH_VERSION;

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<ProviderError>(m, "ProviderError", PyExc_RuntimeError);

    m.def("build", &run_build, py::arg("config"),
          "Build the unified graph; returns the build report.");
    m.def("query", &run_query, py::arg("config"), py::arg("question"),
          "Retrieve context (and optionally an answer) for one question.");
    m.def("evaluate", &run_evaluate, py::arg("config"), py::arg("testset"),
          "Run the recall/QA harness; returns the eval report.");
    m.def("anonymize", &run_anonymize, py::arg("config"), py::arg("testset"),
          py::arg("count") = 0,
          "Apply named-entity anonymization; returns the NEA report.");
    m.def("solve_pcst", &run_solve_pcst, py::arg("nodes"), py::arg("edges"),
          py::arg("config") = py::dict(),
          "Solve a prize-collecting Steiner tree instance.");
}
