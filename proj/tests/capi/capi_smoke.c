/* The header must compile as C. */
#include <stdio.h>
#include <string.h>

#include "dpage/dpage.h"

int main(void) {
  dpage_page *page = NULL;
  char *info = NULL;
  if (dpage_page_new("From C", &page) != DPAGE_OK) return 1;
  if (dpage_page_info(page, &info) != DPAGE_OK) return 1;
  int ok = strstr(info, "\"title\":\"From C\"") != NULL;
  dpage_free(info);
  dpage_page_free(page);
  if (dpage_page_load("[]", 2, &page) != DPAGE_E_PARSE) ok = 0;
  printf("%s %s\n", dpage_version(), ok ? "ok" : "failed");
  return ok ? 0 : 1;
}
