#include "pseudohaptic/service.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <condition_variable>
#include <thread>

namespace pseudohaptic {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;

namespace {

void serve_connection(ExperimentService& service, tcp::socket socket)
{
    beast::error_code ec;
    beast::flat_buffer buffer;
    http::request<http::string_body> req;
    http::read(socket, buffer, req, ec);
    if (ec) {
        return;
    }

    if (!websocket::is_upgrade(req) || req.target() != "/ws") {
        http::response<http::string_body> res;
        res.version(req.version());
        res.keep_alive(false);
        res.set(http::field::content_type, "application/json");
        if (req.target() == "/" || req.target() == "/health") {
            res.result(http::status::ok);
            res.body() = R"({"service":"pseudohaptic","websocket":"/ws"})";
        } else {
            res.result(http::status::not_found);
            res.body() = R"({"error":"not found"})";
        }
        res.prepare_payload();
        http::write(socket, res, ec);
        socket.shutdown(tcp::socket::shutdown_send, ec);
        return;
    }

    websocket::stream<tcp::socket> ws(std::move(socket));
    ws.accept(req, ec);
    if (ec) {
        return;
    }
    ws.text(true);
    for (;;) {
        beast::flat_buffer frame;
        ws.read(frame, ec);
        if (ec) {
            // Closed by the client or broken; either way the session stays.
            return;
        }
        for (const auto& reply : service.handle(beast::buffers_to_string(frame.data()))) {
            ws.write(boost::asio::buffer(reply), ec);
            if (ec) {
                return;
            }
        }
    }
}

}  // namespace

void run_websocket_server(ExperimentService& service, const std::string& address, unsigned short port,
                          std::size_t stop_after, const std::function<void(unsigned short)>& on_listen)
{
    boost::asio::io_context ioc;
    tcp::acceptor acceptor(ioc, {boost::asio::ip::make_address(address), port});
    if (on_listen) {
        on_listen(acceptor.local_endpoint().port());
    }

    std::mutex mutex;
    std::condition_variable done_cv;
    std::size_t accepted = 0;
    std::size_t closed = 0;
    std::vector<std::thread> workers;

    for (;;) {
        tcp::socket socket(ioc);
        acceptor.accept(socket);
        ++accepted;
        workers.emplace_back([&, s = std::move(socket)]() mutable {
            serve_connection(service, std::move(s));
            std::lock_guard lock(mutex);
            ++closed;
            done_cv.notify_all();
        });
        if (stop_after != 0 && accepted >= stop_after) {
            break;
        }
    }
    {
        std::unique_lock lock(mutex);
        done_cv.wait(lock, [&] { return closed >= accepted; });
    }
    for (auto& w : workers) {
        w.join();
    }
}

}  // namespace pseudohaptic
