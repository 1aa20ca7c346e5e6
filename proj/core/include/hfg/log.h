/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/log.h
 * @brief Thin logging facade; level is read from the HFG_LOG environment
 *        variable (trace, debug, info, warn, error, off).
 */
#ifndef HFG_LOG_H_
#define HFG_LOG_H_

#include <string>

namespace hfg::log {

void init_from_env();
void set_level(const std::string& level);

void debug(const std::string& msg);
void info(const std::string& msg);
void warn(const std::string& msg);
void error(const std::string& msg);

}  // namespace hfg::log

#endif  // HFG_LOG_H_
